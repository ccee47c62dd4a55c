"""Exception hierarchy shared by all modules."""


class MIFError(Exception):
    pass


class ParameterError(MIFError, ValueError):
    """Invalid family parameter, weight, or configuration value."""


class RangeError(MIFError, OverflowError):
    """Generated points leave the representable floating-point range."""


class InsufficientDataError(MIFError, ValueError):
    pass


class AtomPoleError(MIFError):
    """Evaluation point lies on (or within the exclusion radius of) an atom.

    Carries the index of the offending atom so callers can switch to the
    limit branch; ``theta`` maps this signal to the value 1.
    """

    def __init__(self, position, atom_index):
        super().__init__(f"evaluation point at atom {position!r} (index {atom_index})")
        self.position = position
        self.atom_index = atom_index


class RegionError(MIFError, ValueError):
    pass


class NumericBranchError(MIFError):
    pass


class CertificationError(MIFError):
    """A numeric certificate (tolerance, residual, winding count) failed."""
