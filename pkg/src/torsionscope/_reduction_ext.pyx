# distutils: language = c++
# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled column-reduction kernels (int64 + C++ vectors).

Mirrors _reduction_py exactly: same twist/clearing order, same low-array
output.  The rational kernel works on primitive integer columns in int64
and raises OverflowError when an elimination step could leave the safe
range; the caller falls back to the big-integer Python kernel.
"""

from libcpp.vector cimport vector

ctypedef long long ll

# Conservative limit: |c_p * x| and |c_j * y| stay below 2^61 each, so
# their difference stays below 2^62, well inside int64.
cdef ll SAFE_LIMIT = <ll>1 << 61


cdef inline ll ll_abs(ll x):
    return -x if x < 0 else x


cdef inline ll gcd_ll(ll a, ll b):
    cdef ll t
    a = ll_abs(a)
    b = ll_abs(b)
    while b:
        t = a % b
        a = b
        b = t
    return a


cdef inline ll mod_inverse(ll a, ll q):
    # Extended Euclid; a in (0, q), q prime.
    cdef ll old_r = a, r = q
    cdef ll old_s = 1, s = 0
    cdef ll quot, t
    while r != 0:
        quot = old_r // r
        t = old_r - quot * r
        old_r = r
        r = t
        t = old_s - quot * s
        old_s = s
        s = t
    old_s %= q
    if old_s < 0:
        old_s += q
    return old_s


cdef void _load_columns(object rows, object coeffs,
                        vector[vector[ll]]& R, vector[vector[ll]]& C):
    cdef Py_ssize_t m = len(rows)
    cdef Py_ssize_t j, k, nnz
    R.resize(m)
    C.resize(m)
    for j in range(m):
        rj = rows[j]
        cj = coeffs[j]
        nnz = len(rj)
        R[j].resize(nnz)
        C[j].resize(nnz)
        for k in range(nnz):
            R[j][k] = rj[k]
            C[j][k] = cj[k]


cdef vector[ll] _make_order(object dims, bint twist):
    cdef Py_ssize_t m = len(dims)
    cdef vector[ll] dvec
    cdef vector[ll] order
    cdef ll maxd = 0
    cdef Py_ssize_t j
    cdef ll d
    dvec.resize(m)
    for j in range(m):
        dvec[j] = dims[j]
        if dvec[j] > maxd:
            maxd = dvec[j]
    order.reserve(m)
    if not twist:
        for j in range(m):
            if dvec[j] >= 1:
                order.push_back(j)
    else:
        d = maxd
        while d >= 1:
            for j in range(m):
                if dvec[j] == d:
                    order.push_back(j)
            d -= 1
    return order


def reduce_mod_q(rows, coeffs, dims, long long q, bint twist=True):
    """Reduce a boundary matrix over Z/qZ; returns the low array as a list."""
    cdef Py_ssize_t m = len(rows)
    cdef vector[vector[ll]] R, C
    cdef vector[vector[ll]] stored_r, stored_c
    cdef vector[ll] low, pivot_of_row, order
    cdef vector[char] cleared
    cdef vector[ll] wr, wc, tr, tc
    cdef Py_ssize_t oi, a, b, n1, n2
    cdef ll j, i, k, factor, v, ra, rb

    _load_columns(rows, coeffs, R, C)
    order = _make_order(dims, twist)
    low.assign(m, -1)
    pivot_of_row.assign(m, -1)
    cleared.assign(m, 0)
    stored_r.resize(m)
    stored_c.resize(m)

    for oi in range(<Py_ssize_t>order.size()):
        j = order[oi]
        if cleared[j]:
            continue
        wr = R[j]
        wc.clear()
        wc.reserve(C[j].size())
        for a in range(<Py_ssize_t>C[j].size()):
            v = C[j][a] % q
            if v < 0:
                v += q
            wc.push_back(v)
        while wr.size() > 0:
            i = wr.back()
            k = pivot_of_row[i]
            if k < 0:
                pivot_of_row[i] = j
                low[j] = i
                stored_r[j] = wr
                stored_c[j] = wc
                if twist:
                    cleared[i] = 1
                break
            factor = (q - (wc.back() * mod_inverse(stored_c[k].back(), q)) % q) % q
            # merge wr/wc with factor * stored[k]
            tr.clear()
            tc.clear()
            a = 0
            b = 0
            n1 = wr.size()
            n2 = stored_r[k].size()
            while a < n1 and b < n2:
                ra = wr[a]
                rb = stored_r[k][b]
                if ra < rb:
                    tr.push_back(ra)
                    tc.push_back(wc[a])
                    a += 1
                elif ra > rb:
                    v = (factor * stored_c[k][b]) % q
                    if v:
                        tr.push_back(rb)
                        tc.push_back(v)
                    b += 1
                else:
                    v = (wc[a] + factor * stored_c[k][b]) % q
                    if v:
                        tr.push_back(ra)
                        tc.push_back(v)
                    a += 1
                    b += 1
            while a < n1:
                tr.push_back(wr[a])
                tc.push_back(wc[a])
                a += 1
            while b < n2:
                v = (factor * stored_c[k][b]) % q
                if v:
                    tr.push_back(stored_r[k][b])
                    tc.push_back(v)
                b += 1
            wr.swap(tr)
            wc.swap(tc)
    return [low[a] for a in range(m)]


def reduce_rational(rows, coeffs, dims, bint twist=True):
    """Reduce over the rationals via primitive int64 columns.

    Raises OverflowError if an elimination step could exceed int64 range.
    """
    cdef Py_ssize_t m = len(rows)
    cdef vector[vector[ll]] R, C
    cdef vector[vector[ll]] stored_r, stored_c
    cdef vector[ll] low, pivot_of_row, order
    cdef vector[char] cleared
    cdef vector[ll] wr, wc, tr, tc
    cdef Py_ssize_t oi, a, b, n1, n2
    cdef ll j, i, k, v, ra, rb, cp, cj, content, wmax, smax

    _load_columns(rows, coeffs, R, C)
    order = _make_order(dims, twist)
    low.assign(m, -1)
    pivot_of_row.assign(m, -1)
    cleared.assign(m, 0)
    stored_r.resize(m)
    stored_c.resize(m)

    for oi in range(<Py_ssize_t>order.size()):
        j = order[oi]
        if cleared[j]:
            continue
        wr = R[j]
        wc = C[j]
        while wr.size() > 0:
            i = wr.back()
            k = pivot_of_row[i]
            if k < 0:
                pivot_of_row[i] = j
                low[j] = i
                stored_r[j] = wr
                stored_c[j] = wc
                if twist:
                    cleared[i] = 1
                break
            cp = stored_c[k].back()
            cj = wc.back()
            wmax = 0
            for a in range(<Py_ssize_t>wc.size()):
                v = ll_abs(wc[a])
                if v > wmax:
                    wmax = v
            smax = 0
            for b in range(<Py_ssize_t>stored_c[k].size()):
                v = ll_abs(stored_c[k][b])
                if v > smax:
                    smax = v
            if (wmax > 0 and ll_abs(cp) > SAFE_LIMIT // wmax) or \
               (smax > 0 and ll_abs(cj) > SAFE_LIMIT // smax):
                raise OverflowError("int64 rational reduction overflow; use the pure kernel")
            tr.clear()
            tc.clear()
            a = 0
            b = 0
            n1 = wr.size()
            n2 = stored_r[k].size()
            content = 0
            while a < n1 and b < n2:
                ra = wr[a]
                rb = stored_r[k][b]
                if ra < rb:
                    v = cp * wc[a]
                    tr.push_back(ra)
                    tc.push_back(v)
                    content = gcd_ll(content, v)
                    a += 1
                elif ra > rb:
                    v = -cj * stored_c[k][b]
                    tr.push_back(rb)
                    tc.push_back(v)
                    content = gcd_ll(content, v)
                    b += 1
                else:
                    v = cp * wc[a] - cj * stored_c[k][b]
                    if v:
                        tr.push_back(ra)
                        tc.push_back(v)
                        content = gcd_ll(content, v)
                    a += 1
                    b += 1
            while a < n1:
                v = cp * wc[a]
                tr.push_back(wr[a])
                tc.push_back(v)
                content = gcd_ll(content, v)
                a += 1
            while b < n2:
                v = -cj * stored_c[k][b]
                tr.push_back(stored_r[k][b])
                tc.push_back(v)
                content = gcd_ll(content, v)
                b += 1
            if content > 1:
                for a in range(<Py_ssize_t>tc.size()):
                    tc[a] = tc[a] // content
            wr.swap(tr)
            wc.swap(tc)
    return [low[a] for a in range(m)]
