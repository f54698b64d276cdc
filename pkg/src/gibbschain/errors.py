"""Exception types shared across the package."""


class ModelError(ValueError):
    """A model document or model value violates its invariants."""


class CapacityError(RuntimeError):
    """A requested computation exceeds a configured size cap or budget."""


class CrossCheckError(RuntimeError):
    """Two methods that must agree produced different results."""
