# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled PBW straightening kernel; same contract as ``_straighten_py``."""

cdef double PRUNE = 1e-14


cdef class Straightener:
    cdef tuple _brackets
    cdef int _dim
    cdef dict _cache

    def __init__(self, brackets, int dim):
        self._brackets = tuple(tuple(row) for row in brackets)
        self._dim = dim
        self._cache = {}

    def cache_size(self):
        return len(self._cache)

    def clear(self):
        self._cache.clear()

    cpdef dict normal_form(self, object word):
        cdef tuple w = tuple(word)
        cdef object cached = self._cache.get(w)
        if cached is not None:
            return <dict>cached
        cdef Py_ssize_t n = len(w)
        cdef Py_ssize_t i, pos = -1
        cdef long a, b, letter
        for i in range(n - 1):
            if <long>w[i] > <long>w[i + 1]:
                pos = i
                break
        cdef list exps
        cdef dict result
        if pos < 0:
            exps = [0] * self._dim
            for i in range(n):
                letter = w[i]
                exps[letter] += 1
            result = {tuple(exps): 1.0 + 0j}
            self._cache[w] = result
            return result
        a = w[pos]
        b = w[pos + 1]
        cdef tuple head = w[:pos]
        cdef tuple tail = w[pos + 2:]
        result = dict(self.normal_form(head + (b, a) + tail))
        cdef dict sub
        cdef double complex c, coef
        cdef object mono
        for k, cc in (<tuple>self._brackets[a])[b]:
            c = cc
            sub = self.normal_form(head + (k,) + tail)
            for mono, coef in sub.items():
                result[mono] = result.get(mono, 0) + c * coef
        result = {m: v for m, v in result.items() if abs(v) > PRUNE}
        self._cache[w] = result
        return result
