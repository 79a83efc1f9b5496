"""Exception types. Each carries a machine-readable ``category`` string."""


class NNDispError(Exception):
    category = "error"


class DomainError(NNDispError, ValueError):
    category = "domain_error"


class DegenerateInputError(NNDispError, ValueError):
    category = "degenerate_input"


class NonNormalizedNoiseError(NNDispError, ValueError):
    category = "non_normalized_noise"


class GuardError(NNDispError, ValueError):
    category = "guard_exceeded"


class UnsupportedError(NNDispError, ValueError):
    category = "unsupported"


class UsageError(NNDispError):
    category = "usage_error"
