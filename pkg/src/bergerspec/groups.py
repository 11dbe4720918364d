"""Finite groups acting freely by isometries on S^3.

Coordinates on S^3 in R^4 are identified with quaternions through
``x -> x1 + x2 i + x3 j - x4 k``. Under this identification the Hopf field
``(-x2, x1, -x4, x3)`` is right multiplication by ``i``, so it commutes with
every left multiplication ``x -> g x``. In complex coordinates
``z1 = x1 + i x2``, ``z2 = x3 + i x4`` the lens actions are diagonal
unitaries and commute with the same field.
"""

from dataclasses import dataclass, field
from collections import deque
from importlib import resources
import json
import math

import numpy as np

from .errors import NotFiniteError, NotFreeError

DEDUP_TOL = 1e-9
AMBIGUITY_TOL = 1e-6

# reflection x4 -> -x4 between sphere coordinates and quaternion components
_FLIP = np.diag([1.0, 1.0, 1.0, -1.0])


def qmul(p, q):
    a1, b1, c1, d1 = p
    a2, b2, c2, d2 = q
    return np.array(
        [
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        ]
    )


def left_matrix(q):
    """Matrix of ``x -> q x`` on quaternion components."""
    a, b, c, d = q
    return np.array(
        [
            [a, -b, -c, -d],
            [b, a, -d, c],
            [c, d, a, -b],
            [d, -c, b, a],
        ]
    )


def right_matrix(q):
    """Matrix of ``x -> x q`` on quaternion components."""
    a, b, c, d = q
    return np.array(
        [
            [a, -b, -c, -d],
            [b, a, d, -c],
            [c, -d, a, b],
            [d, c, -b, a],
        ]
    )


def to_quaternion(x):
    return _FLIP @ np.asarray(x, dtype=float)


def from_quaternion(q):
    return _FLIP @ np.asarray(q, dtype=float)


@dataclass(frozen=True)
class UnitQuaternion:
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if abs(math.sqrt(self.a ** 2 + self.b ** 2 + self.c ** 2 + self.d ** 2) - 1.0) > 1e-12:
            raise ValueError(f"not a unit quaternion: {self.as_array()}")

    @classmethod
    def from_array(cls, q, normalize=True):
        q = np.asarray(q, dtype=float)
        if normalize:
            q = q / np.linalg.norm(q)
        return cls(*(float(v) for v in q))

    def as_array(self):
        return np.array([self.a, self.b, self.c, self.d])

    def __mul__(self, other):
        return UnitQuaternion.from_array(qmul(self.as_array(), other.as_array()))

    def inverse(self):
        return UnitQuaternion(self.a, -self.b, -self.c, -self.d)

    def __pow__(self, k):
        out = UnitQuaternion(1.0, 0.0, 0.0, 0.0)
        base = self if k >= 0 else self.inverse()
        for _ in range(abs(k)):
            out = out * base
        return out

    def distance(self, other):
        return float(np.linalg.norm(self.as_array() - other.as_array()))

    def sphere_matrix(self):
        """Left multiplication written in sphere coordinates."""
        return _FLIP @ left_matrix(self.as_array()) @ _FLIP


IDENTITY = UnitQuaternion(1.0, 0.0, 0.0, 0.0)


@dataclass
class FiniteGroup:
    """Finite group of unit quaternions acting on S^3 by left multiplication."""

    elements: list
    generator_labels: list = field(default_factory=list)
    name: str = ""
    generators: list = field(default_factory=list)

    action = "left_quaternion"

    @property
    def order(self):
        return len(self.elements)

    def as_array(self):
        return np.array([g.as_array() for g in self.elements])

    def matrices(self):
        return [g.sphere_matrix() for g in self.elements]

    def index_of(self, q, tol=DEDUP_TOL):
        arr = self.as_array()
        d = np.linalg.norm(arr - np.asarray(q), axis=1)
        k = int(np.argmin(d))
        return k if d[k] <= tol else None

    def is_identity(self, g):
        return g.distance(IDENTITY) <= DEDUP_TOL

    def axiom_residuals(self):
        """Exhaustive closure / identity / inverse check; returns a dict of booleans."""
        arr = self.as_array()
        closed = True
        for g in arr:
            prods = np.array([qmul(g, h) for h in arr])
            d = np.linalg.norm(prods[:, None, :] - arr[None, :, :], axis=2)
            if np.max(np.min(d, axis=1)) > DEDUP_TOL:
                closed = False
                break
        has_identity = self.index_of(IDENTITY.as_array()) is not None
        inverses = all(self.index_of(g.inverse().as_array()) is not None for g in self.elements)
        return {"closed": closed, "identity": has_identity, "inverses": inverses}


def generate_group(generators, cap=10_000, labels=None, name=""):
    """Breadth-first closure of ``generators`` under multiplication."""
    gens = [g if isinstance(g, UnitQuaternion) else UnitQuaternion.from_array(g) for g in generators]
    elements = [IDENTITY]
    store = np.empty((cap + 1, 4))
    store[0] = IDENTITY.as_array()
    queue = deque([IDENTITY])
    while queue:
        g = queue.popleft()
        for h in gens:
            prod = g * h
            d = np.linalg.norm(store[: len(elements)] - prod.as_array(), axis=1)
            nearest = float(np.min(d))
            if nearest <= DEDUP_TOL:
                continue
            if nearest < AMBIGUITY_TOL:
                raise NotFiniteError(f"ambiguous closure: elements {nearest:.2e} apart", size=len(elements))
            if len(elements) >= cap:
                raise NotFiniteError(f"closure exceeds cap of {cap} elements", size=len(elements) + 1)
            store[len(elements)] = prod.as_array()
            elements.append(prod)
            queue.append(prod)
    return FiniteGroup(elements, list(labels or []), name, gens)


def cyclic_group(m):
    ang = 2 * math.pi / m
    return generate_group([(math.cos(ang), math.sin(ang), 0.0, 0.0)], labels=["a"], name=f"cyclic_{m}")


def binary_dihedral_group(m):
    """Order-4m group generated by ``exp(pi i / m)`` and ``j``."""
    ang = math.pi / m
    return generate_group(
        [(math.cos(ang), math.sin(ang), 0.0, 0.0), (0.0, 0.0, 1.0, 0.0)],
        labels=["a", "b"],
        name=f"binary_dihedral_{4 * m}",
    )


# --------------------------------------------------------------------------
# Matrix actions (lens spaces and arbitrary finite-order rotations)


@dataclass
class MatrixAction:
    """A finite cyclic group of orthogonal 4x4 matrices generated by one matrix."""

    generator: np.ndarray
    name: str = ""
    action = "matrix"

    def __post_init__(self):
        self.generator = np.asarray(self.generator, dtype=float)
        self._elements = self._close()

    def _close(self, cap=10_000):
        eye = np.eye(self.generator.shape[0])
        out = [eye]
        cur = self.generator
        while np.max(np.abs(cur - eye)) > DEDUP_TOL:
            out.append(cur)
            cur = cur @ self.generator
            if len(out) > cap:
                raise NotFiniteError(f"generator order exceeds cap {cap}", size=len(out))
        return out

    @property
    def order(self):
        return len(self._elements)

    def matrices(self):
        return list(self._elements)


def _rot(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


class LensAction(MatrixAction):
    """``(z1, z2) -> (zeta z1, zeta^q z2)`` with ``zeta = exp(2 pi i / m)``."""

    action = "lens"

    def __init__(self, m, q, name=None):
        if m < 2:
            raise ValueError("lens order m must be >= 2")
        if math.gcd(q, m) != 1:
            raise ValueError(f"q = {q} is not coprime to m = {m}")
        self.m = m
        self.q = q
        gen = np.zeros((4, 4))
        gen[:2, :2] = _rot(2 * math.pi / m)
        gen[2:, 2:] = _rot(2 * math.pi * q / m)
        super().__init__(gen, name or f"lens_{m}_{q}")
        if self.order != m:
            raise ValueError(f"generator order {self.order} != {m}")


# --------------------------------------------------------------------------
# Certificates


@dataclass
class FreenessCertificate:
    name: str
    order: int
    free: bool
    delta_min: float
    delta_exact: float


def is_free_action(G, samples):
    """Certify that no non-identity element of ``G`` has a fixed point.

    ``samples`` are points of S^3 in R^4 (rows). The sampled minimal displacement
    is reported together with the exact one, ``min sigma_min(M - I)``.
    """
    X = np.asarray(samples, dtype=float)
    eye = np.eye(4)
    delta_min = math.inf
    delta_exact = math.inf
    elements = G.elements if isinstance(G, FiniteGroup) else None
    for idx, M in enumerate(G.matrices()):
        if np.max(np.abs(M - eye)) <= DEDUP_TOL:
            continue
        if elements is not None and elements[idx].a >= 1.0 - 1e-12:
            raise NotFreeError(f"element {idx} has real part 1", element=idx, distance=0.0)
        exact = float(np.linalg.svd(M - eye, compute_uv=False)[-1])
        sampled = float(np.min(np.linalg.norm(X @ (M - eye).T, axis=1)))
        if exact <= DEDUP_TOL or sampled <= DEDUP_TOL:
            raise NotFreeError(
                f"element {idx} of {getattr(G, 'name', '')!r} has a fixed point",
                element=idx,
                distance=min(exact, sampled),
            )
        delta_min = min(delta_min, sampled)
        delta_exact = min(delta_exact, exact)
    return FreenessCertificate(getattr(G, "name", ""), G.order, True, delta_min, delta_exact)


def invariance_residual(obj, G, sphere, samples):
    """Max deviation of a metric (pullback) or vector field (pushforward) under ``G``.

    ``obj`` is anything with ``metric(p)`` (a charted or deformed metric) or
    ``components(p)`` (a charted vector field) on the 3-sphere ``sphere``.
    ``samples`` are chart points.
    """
    is_field = hasattr(obj, "components") and not hasattr(obj, "metric")
    worst = 0.0
    mats = G.matrices()
    for p in samples:
        X = sphere.embed(p)
        base = sphere.ambient_vector(obj, p) if is_field else sphere.ambient_tensor(obj, p)
        for M in mats:
            q = sphere.point(M @ X)
            if is_field:
                moved = sphere.ambient_vector(obj, q)
                worst = max(worst, float(np.max(np.abs(moved - M @ base))))
            else:
                pulled = M.T @ sphere.ambient_tensor(obj, q) @ M
                worst = max(worst, float(np.max(np.abs(pulled - base))))
    return worst


def noninvariance_witness(u, G, sphere, samples):
    """``max_gamma sup_x |u(gamma x) - u(x)|`` for a scalar field on S^3."""
    worst = 0.0
    mats = G.matrices()
    for p in samples:
        X = sphere.embed(p)
        u0 = u.value(p)
        for M in mats:
            worst = max(worst, abs(u.value(sphere.point(M @ X)) - u0))
    return worst


# --------------------------------------------------------------------------
# Group definition files


def load_group(source):
    """Build a group from a definition dict or a JSON file path.

    Format: ``{name, action: "left_quaternion" | "lens", generators: [[a,b,c,d], ...] | {m, q}}``
    with an optional ``order`` that is asserted after closure.
    """
    if isinstance(source, dict):
        spec = source
    else:
        with open(source, encoding="utf-8") as fh:
            spec = json.load(fh)
    name = spec.get("name", "")
    action = spec.get("action")
    if action == "left_quaternion":
        gens = spec["generators"]
        G = generate_group(
            [UnitQuaternion.from_array(g, normalize=False) for g in gens],
            labels=spec.get("generator_labels"),
            name=name,
        )
    elif action == "lens":
        G = LensAction(int(spec["generators"]["m"]), int(spec["generators"]["q"]), name=name)
    else:
        raise ValueError(f"unknown action {action!r}")
    expected = spec.get("order")
    if expected is not None and G.order != expected:
        raise ValueError(f"group {name!r}: closure order {G.order} != declared {expected}")
    return G


def shipped_group_names():
    files = resources.files("bergerspec") / "data" / "groups"
    return sorted(f.name[:-5] for f in files.iterdir() if f.name.endswith(".json"))


def shipped_group_path(name):
    return resources.files("bergerspec") / "data" / "groups" / f"{name}.json"


def load_shipped(name):
    with resources.as_file(shipped_group_path(name)) as path:
        return load_group(path)


def icosian_relation_residual(a, b):
    """Residuals of ``(ab)^2 = a^3 = b^5`` on two unit quaternions."""
    ab2 = (a * b) ** 2
    a3 = a ** 3
    b5 = b ** 5
    return max(ab2.distance(a3), a3.distance(b5))
