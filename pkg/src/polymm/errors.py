"""Exception types raised across the package."""


class PolyMMError(Exception):
    """Base class; ``degree`` is set when the failure is tied to one degree."""

    code = "error"

    def __init__(self, message: str = "", degree: int | None = None):
        super().__init__(message)
        self.degree = degree

    def to_dict(self) -> dict:
        out = {"error": self.code, "type": type(self).__name__, "message": str(self)}
        if self.degree is not None:
            out["degree"] = self.degree
        return out


class CapacityError(PolyMMError):
    code = "capacity"


class SpectraOverlap(PolyMMError):
    code = "spectra_overlap"


class DefectiveMatrix(PolyMMError):
    code = "defective_matrix"


class SharedEigenvalue(PolyMMError):
    code = "shared_eigenvalue"


class RankDeficientOmega(PolyMMError):
    code = "rank_deficient_omega"


class RankDeficientXi(PolyMMError):
    code = "rank_deficient_xi"


class WlRankDeficient(PolyMMError):
    code = "wl_rank_deficient"


class XiRankDeficient(PolyMMError):
    code = "xi_rank_deficient"


class PreconditionError(PolyMMError):
    code = "precondition"


class Diverged(PolyMMError):
    code = "diverged"


class IllConditioned(PolyMMError):
    code = "ill_conditioned"


class GridMismatch(PolyMMError):
    code = "grid_mismatch"


class SchemaError(PolyMMError):
    code = "schema"


class ConventionMismatch(PolyMMError):
    code = "convention_mismatch"


class SpectrumViolation(PolyMMError):
    code = "spectrum_violation"
