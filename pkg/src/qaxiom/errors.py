"""Exception hierarchy shared by every qaxiom module."""


class QaxiomError(Exception):
    """Base class for all errors raised by qaxiom."""


class ExprSyntaxError(QaxiomError, ValueError):
    """Malformed expression text.

    ``offset`` is the byte offset (UTF-8) into the source at which parsing
    stopped.
    """

    def __init__(self, message, offset, text=""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} (at byte {offset})")


class UnknownSymbol(QaxiomError, KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(name)

    def __str__(self):
        return f"unknown symbol {self.name!r}"


class UnboundSymbol(QaxiomError, KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(name)

    def __str__(self):
        return f"no value bound for symbol {self.name!r}"


class MismatchedSpace(QaxiomError, ValueError):
    pass


class InvalidSpec(QaxiomError, ValueError):
    pass


class UnsupportedExpression(QaxiomError, ValueError):
    pass


class MismatchedRep(QaxiomError, ValueError):
    pass


class ZeroKet(QaxiomError, ValueError):
    pass


class DegeneratePair(QaxiomError, ValueError):
    pass


class NonHermitianHamiltonian(QaxiomError, ValueError):
    pass


class InvalidInterval(QaxiomError, ValueError):
    pass


class NonUnitaryPropagator(QaxiomError, ValueError):
    pass


class NonuniformGrid(QaxiomError, ValueError):
    pass


class TooFewSamples(QaxiomError, ValueError):
    pass


class EContamination(QaxiomError, ValueError):
    """A Hamiltonian handed to the autonomizer already references E."""


class NonfiniteState(QaxiomError, ArithmeticError):
    pass


class UnknownSuite(QaxiomError, ValueError):
    pass


class InvalidConfig(QaxiomError, ValueError):
    pass
