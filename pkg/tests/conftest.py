import numpy as np
import pytest

from bergerspec.sphere import RoundSphere


def cubic_field(sphere, seed=7):
    """A generic cubic polynomial of the ambient coordinates, restricted to the sphere."""
    d = sphere.ambient_dim
    rng = np.random.default_rng(seed)
    a = rng.normal(size=d)
    B = rng.normal(size=(d, d))
    B = B + B.T
    c = rng.normal(size=d)

    def F(X):
        return float(a @ X + 0.5 * X @ B @ X + (c @ X) ** 3)

    def gradF(X):
        return a + B @ X + 3 * (c @ X) ** 2 * c

    def hessF(X):
        return B + 6 * (c @ X) * np.outer(c, c)

    return sphere.ambient_scalar(F, gradF, hessF)


def report_line(label, ok, detail=""):
    print(f"{'PASS' if ok else 'FAIL'} {label} {detail}".rstrip())


@pytest.fixture(scope="session")
def s3():
    return RoundSphere(3)


@pytest.fixture(scope="session")
def s5():
    return RoundSphere(5)
