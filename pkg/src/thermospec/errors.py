"""Exception hierarchy shared by all modules.

Each error carries a ``category`` used by the command line front-end to map
failures onto exit codes (config=2, cap=3, domain=4).
"""


class ThermoError(Exception):
    category = "domain"


class ConfigError(ThermoError):
    category = "config"


class NotPrimitive(ThermoError):
    category = "config"


class DegenerateRow(ThermoError):
    category = "config"


class NonIrreducible(ThermoError):
    pass


class OrderMismatch(ThermoError):
    pass


class ResolutionTooFine(ThermoError):
    category = "cap"


class NotInLPhi(ThermoError):
    pass


class BoundaryAlpha(ThermoError):
    pass


class RangeEscapesLPhi(ThermoError):
    pass


class NotFullDimensional(ThermoError):
    pass


class NotHomogeneous(ThermoError):
    pass


class NotNormalized(ThermoError):
    pass
