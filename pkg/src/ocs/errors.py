"""Exception taxonomy for numerical guards and structural violations.

Guard errors carry enough context (shell index, offending value) to be
reported by the CLI without re-running the computation.
"""

from __future__ import annotations


class OcsError(Exception):
    """Base class for all library-specific errors."""


class StructureError(OcsError):
    """Input does not describe a valid one-channel operator."""


class NotOneChannel(StructureError):
    """A between-shell coupling block is not numerically rank one."""

    def __init__(self, ratio: float, n: int | None = None):
        self.ratio = ratio
        self.n = n
        where = f" between shells {n - 1} and {n}" if n is not None else ""
        super().__init__(
            f"coupling block{where} has singular-value ratio {ratio:.3e} "
            f"above the rank-one tolerance"
        )


class DanglingComponent(StructureError):
    """Vertices of the adjacency are unreachable from the seed set."""

    def __init__(self, vertices):
        self.vertices = list(vertices)
        preview = ", ".join(map(str, self.vertices[:5]))
        super().__init__(
            f"{len(self.vertices)} vertices unreachable from the seed set "
            f"(e.g. {preview})"
        )


class BrokenChannel(StructureError):
    """The two channel vectors of a shell never communicate through V."""

    def __init__(self, n: int):
        self.n = n
        super().__init__(f"channel through shell {n} is broken: beta vanishes identically")


class GuardError(OcsError):
    """A numerical guard tripped; the requested value is not reliable."""


class ZTooCloseToSpectrum(GuardError):
    """Spectral parameter within the guard radius of a retained pole."""

    def __init__(self, z, eigenvalue, n: int | None = None):
        self.z = z
        self.eigenvalue = eigenvalue
        self.n = n
        super().__init__(
            f"z = {z} is within the guard radius of shell eigenvalue {eigenvalue}"
            + (f" (shell {n})" if n is not None else "")
        )


class ChannelSingular(GuardError):
    """Transfer matrix undefined at this energy (channel zero or quotient point)."""

    def __init__(self, kind: str, z, n: int | None = None):
        self.kind = kind
        self.z = z
        self.n = n
        super().__init__(f"transfer matrix singular at z = {z}: {kind}"
                         + (f" (shell {n})" if n is not None else ""))


class ExtensionDiverged(GuardError):
    """Richardson levels of the one-sided limit disagree; no extension exists."""

    def __init__(self, spread: float, tol: float):
        self.spread = spread
        self.tol = tol
        super().__init__(
            f"extrapolation levels disagree by {spread:.3e} (tol {tol:.1e}); "
            f"no holomorphic extension at this energy"
        )


class NotSingularHere(OcsError):
    """Holomorphic extension requested at an energy that is not exceptional."""


class ColinearityFailed(OcsError):
    """Boundary matching failed: propagated state not parallel to the target."""

    def __init__(self, defect: float):
        self.defect = defect
        super().__init__(f"boundary states not colinear (defect {defect:.3e})")


class SupportViolation(OcsError):
    """Energy inside the closed support hull of the disorder measure."""


class DomainViolation(OcsError):
    """Energy outside the domain where the limit formulas are valid."""


class I0Violation(OcsError):
    """Interval condition failed: a hull potential makes the channel overlap vanish."""

    def __init__(self, witness, lam):
        self.witness = witness
        self.lam = lam
        super().__init__(
            f"channel overlap vanishes at lambda = {lam} for diagonal witness {witness}"
        )


class DenominatorBlowup(GuardError):
    """A disorder denominator came within the guard of zero."""


class NotElliptic(OcsError):
    """Conjugation to a rotation requested for a matrix with |trace| >= 2."""

    def __init__(self, trace):
        self.trace = trace
        super().__init__(f"matrix is not elliptic: trace = {trace}")


class ConfigError(OcsError):
    """Experiment configuration invalid; carries a field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")
