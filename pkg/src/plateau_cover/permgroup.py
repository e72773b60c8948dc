"""Permutations, words over finitely presented groups and homomorphisms to S_d.

Points are 1-based. Composition is left to right along a traversal:
``compose(p, q)`` applies ``p`` first, then ``q``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import permutations as _all_perms

MAX_CLOSURE_DEGREE = 6


class GroupError(ValueError):
    pass


@dataclass(frozen=True)
class Permutation:
    image: tuple

    def __post_init__(self):
        img = tuple(int(x) for x in self.image)
        if sorted(img) != list(range(1, len(img) + 1)):
            raise GroupError(f"not a bijection of 1..{len(img)}: {list(img)}")
        object.__setattr__(self, "image", img)

    @property
    def degree(self):
        return len(self.image)

    @classmethod
    def identity(cls, d):
        return cls(tuple(range(1, d + 1)))

    @classmethod
    def from_cycles(cls, d, cycles):
        """Build from a cycle list, e.g. ``from_cycles(3, [(1, 2, 3)])``, or a string "(1 2 3)"."""
        if isinstance(cycles, str):
            cycles = [tuple(int(t) for t in grp.replace(",", " ").split())
                      for grp in re.findall(r"\(([^)]*)\)", cycles)]
        img = list(range(1, d + 1))
        seen = set()
        for cyc in cycles:
            for x in cyc:
                if not 1 <= x <= d or x in seen:
                    raise GroupError(f"bad cycle {cyc} for degree {d}")
                seen.add(x)
            for i, x in enumerate(cyc):
                img[x - 1] = cyc[(i + 1) % len(cyc)]
        return cls(tuple(img))

    def __call__(self, x):
        return self.image[x - 1]

    def __mul__(self, other):
        return compose(self, other)

    def inverse(self):
        return inverse(self)

    def is_identity(self):
        return all(v == i + 1 for i, v in enumerate(self.image))

    def fixed_points(self):
        return [i + 1 for i, v in enumerate(self.image) if v == i + 1]

    def cycles(self):
        out, seen = [], set()
        for start in range(1, self.degree + 1):
            if start in seen or self(start) == start:
                continue
            cyc, x = [], start
            while x not in seen:
                seen.add(x)
                cyc.append(x)
                x = self(x)
            out.append(tuple(cyc))
        return out

    def __str__(self):
        cyc = self.cycles()
        if not cyc:
            return "id"
        return "".join("(" + " ".join(map(str, c)) + ")" for c in cyc)


def compose(p, q):
    """Apply p, then q."""
    if p.degree != q.degree:
        raise GroupError(f"degree mismatch: {p.degree} vs {q.degree}")
    return Permutation(tuple(q(p(x)) for x in range(1, p.degree + 1)))


def inverse(p):
    img = [0] * p.degree
    for i, v in enumerate(p.image):
        img[v - 1] = i + 1
    return Permutation(tuple(img))


def apply(p, point):
    if not 1 <= point <= p.degree:
        raise GroupError(f"point {point} outside 1..{p.degree}")
    return p(point)


def product(perms, d):
    out = Permutation.identity(d)
    for p in perms:
        out = compose(out, p)
    return out


def all_permutations(d):
    return [Permutation(tuple(x + 1 for x in img)) for img in _all_perms(range(d))]


@dataclass(frozen=True)
class Word:
    """Freely reduced word; letters are (symbol, +1 or -1)."""

    letters: tuple = ()

    def __post_init__(self):
        stack = []
        for sym, exp in self.letters:
            exp = int(exp)
            if exp not in (1, -1):
                raise GroupError(f"exponent must be +-1, got {exp}")
            if stack and stack[-1][0] == sym and stack[-1][1] == -exp:
                stack.pop()
            else:
                stack.append((str(sym), exp))
        object.__setattr__(self, "letters", tuple(stack))

    @classmethod
    def parse(cls, text):
        """Parse "a b B a^-1" style text.

        Tokens are generator names optionally followed by ``^-1`` or ``^1``.
        Without whitespace each character is a generator and an upper case
        letter denotes the inverse of its lower case generator ("abAB").
        """
        text = text.strip()
        if not text or text in ("1", "e"):
            return cls(())
        letters = []
        if " " not in text and "^" not in text:
            for ch in text:
                if ch.isupper():
                    letters.append((ch.lower(), -1))
                else:
                    letters.append((ch, 1))
            return cls(tuple(letters))
        for tok in text.split():
            m = re.fullmatch(r"([A-Za-z_][A-Za-z0-9_]*)(\^(-?1))?", tok)
            if not m:
                raise GroupError(f"bad word token {tok!r}")
            letters.append((m.group(1), int(m.group(3) or 1)))
        return cls(tuple(letters))

    def inverse(self):
        return Word(tuple((s, -e) for s, e in reversed(self.letters)))

    def __mul__(self, other):
        return Word(self.letters + other.letters)

    def __len__(self):
        return len(self.letters)

    def exponent_sum(self, sym=None):
        return sum(e for s, e in self.letters if sym is None or s == sym)

    def symbols(self):
        return {s for s, _ in self.letters}

    def __str__(self):
        if not self.letters:
            return "1"
        return " ".join(s if e == 1 else f"{s}^-1" for s, e in self.letters)


@dataclass(frozen=True)
class Presentation:
    generators: tuple
    relators: tuple = ()

    def __post_init__(self):
        gens = tuple(str(g) for g in self.generators)
        if len(set(gens)) != len(gens):
            raise GroupError("duplicate generators")
        rels = tuple(r if isinstance(r, Word) else Word.parse(r) for r in self.relators)
        for r in rels:
            unknown = r.symbols() - set(gens)
            if unknown:
                raise GroupError(f"relator {r} uses undeclared generators {sorted(unknown)}")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "relators", rels)


def _evaluate(images, w, d):
    out = Permutation.identity(d)
    for sym, exp in w.letters:
        if sym not in images:
            raise GroupError(f"unknown generator {sym!r}")
        g = images[sym]
        out = compose(out, g if exp == 1 else inverse(g))
    return out


def check_relations(pres, images):
    if not images:
        return True
    d = next(iter(images.values())).degree
    return all(_evaluate(images, r, d).is_identity() for r in pres.relators)


@dataclass(frozen=True)
class Homomorphism:
    presentation: Presentation
    images: dict = field(hash=False)
    degree: int = 0

    def __post_init__(self):
        imgs = {str(k): (v if isinstance(v, Permutation) else Permutation(tuple(v)))
                for k, v in self.images.items()}
        missing = set(self.presentation.generators) - set(imgs)
        if missing:
            raise GroupError(f"no image for generators {sorted(missing)}")
        extra = set(imgs) - set(self.presentation.generators)
        if extra:
            raise GroupError(f"images given for undeclared generators {sorted(extra)}")
        degs = {p.degree for p in imgs.values()}
        d = self.degree or (degs.pop() if len(degs) == 1 else 0)
        if not d or any(p.degree != d for p in imgs.values()):
            raise GroupError("generator images must share one degree")
        object.__setattr__(self, "images", imgs)
        object.__setattr__(self, "degree", d)
        for r in self.presentation.relators:
            if not _evaluate(imgs, r, d).is_identity():
                raise GroupError(f"relator {r} does not map to the identity")


def evaluate_word(hom, w):
    return _evaluate(hom.images, w, hom.degree)


def orbit(perms, point, d):
    seen, todo = {point}, [point]
    while todo:
        x = todo.pop()
        for p in perms:
            y = p(x)
            if y not in seen:
                seen.add(y)
                todo.append(y)
    return seen


def subgroup_index(hom, basepoint):
    """Index of the preimage of Stab(basepoint); equals the orbit size."""
    if not 1 <= basepoint <= hom.degree:
        raise GroupError(f"basepoint {basepoint} outside 1..{hom.degree}")
    return len(orbit(list(hom.images.values()), basepoint, hom.degree))


def image_subgroup(hom):
    """All elements of the image group, by closure under the generator images."""
    d = hom.degree
    if d > MAX_CLOSURE_DEGREE:
        raise GroupError(f"subgroup closure limited to degree <= {MAX_CLOSURE_DEGREE}, got {d}")
    gens = list(hom.images.values())
    ident = Permutation.identity(d)
    elems, todo = {ident}, [ident]
    while todo:
        x = todo.pop()
        for g in gens:
            y = compose(x, g)
            if y not in elems:
                elems.add(y)
                todo.append(y)
    return elems


def is_normal(hom, basepoint):
    """Whether Stab(basepoint) within the image group is normal in it."""
    if not 1 <= basepoint <= hom.degree:
        raise GroupError(f"basepoint {basepoint} outside 1..{hom.degree}")
    group = image_subgroup(hom)
    stab = {g for g in group if g(basepoint) == basepoint}
    for g in hom.images.values():
        gi = inverse(g)
        for s in stab:
            if compose(compose(gi, s), g) not in stab:
                return False
    return True


def in_subgroup(hom, basepoint, w):
    return evaluate_word(hom, w)(basepoint) == basepoint


def conjugate(p, g):
    """g^-1 p g under left-to-right composition: relabels point x as g(x)."""
    return compose(compose(inverse(g), p), g)


def parse_hom_document(doc):
    """Build (presentation, images dict, basepoint) from a group-check JSON object."""
    try:
        gens = doc["generators"]
        rels = doc.get("relators", [])
        raw = doc["images"]
        basepoint = int(doc.get("basepoint", 1))
    except (KeyError, TypeError) as exc:
        raise GroupError(f"group document missing field: {exc}") from exc
    rel_words = []
    for r in rels:
        if isinstance(r, str):
            rel_words.append(Word.parse(r))
        else:
            rel_words.append(Word(tuple((s, e) for s, e in r)))
    pres = Presentation(tuple(gens), tuple(rel_words))
    try:
        images = {str(k): Permutation(tuple(v)) for k, v in raw.items()}
    except TypeError as exc:
        raise GroupError(f"images must be image lists: {exc}") from exc
    return pres, images, basepoint
