"""Pure-Python PBW straightening kernel (fallback for ``_cstraighten``)."""

PRUNE = 1e-14


class Straightener:
    """Memoized normal ordering of basis words.

    ``brackets[a][b]`` lists ``(k, c)`` pairs with ``[e_a, e_b] = sum c e_k``.
    ``normal_form(word)`` returns ``{exponents: coefficient}``; the returned
    dicts are cached and must not be mutated by callers.
    """

    def __init__(self, brackets, dim):
        self._brackets = brackets
        self._dim = dim
        self._cache = {}

    def cache_size(self):
        return len(self._cache)

    def clear(self):
        self._cache.clear()

    def normal_form(self, word):
        word = tuple(word)
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        n = len(word)
        pos = -1
        for i in range(n - 1):
            if word[i] > word[i + 1]:
                pos = i
                break
        if pos < 0:
            exps = [0] * self._dim
            for letter in word:
                exps[letter] += 1
            result = {tuple(exps): 1.0 + 0j}
            self._cache[word] = result
            return result
        a = word[pos]
        b = word[pos + 1]
        head = word[:pos]
        tail = word[pos + 2:]
        # e_a e_b = e_b e_a + [e_a, e_b]
        result = dict(self.normal_form(head + (b, a) + tail))
        for k, c in self._brackets[a][b]:
            for mono, coef in self.normal_form(head + (k,) + tail).items():
                result[mono] = result.get(mono, 0) + c * coef
        result = {m: c for m, c in result.items() if abs(c) > PRUNE}
        self._cache[word] = result
        return result
