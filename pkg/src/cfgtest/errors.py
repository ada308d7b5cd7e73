"""Exception hierarchy shared by every cfgtest module."""


class CfgTestError(Exception):
    """Base class for all framework errors."""


class RegistryError(CfgTestError):
    """A parameter registry could not be built."""


class DuplicateParam(RegistryError):
    pass


class DanglingDependency(RegistryError):
    pass


class CyclicDependency(RegistryError):
    pass


class BadDefault(RegistryError):
    pass


class InvalidParamId(CfgTestError, ValueError):
    def __init__(self, name, line=None):
        self.name = name
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}invalid parameter id {name!r}")


class UnknownParam(CfgTestError, KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(name)

    def __str__(self):
        return f"unknown parameter {self.name!r}"


class MissingValue(CfgTestError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"parameter {name!r} has no value and no default")


class TypeMismatch(CfgTestError, ValueError):
    def __init__(self, name, raw, kind, reason=""):
        self.name = name
        self.raw = raw
        self.kind = kind
        self.reason = reason
        msg = f"parameter {name!r}: {raw!r} is not a valid {kind}"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)


class MalformedLine(CfgTestError, ValueError):
    def __init__(self, line, text=""):
        self.line = line
        self.text = text
        super().__init__(f"line {line}: malformed entry {text!r} (expected key=value)")


class ManifestError(CfgTestError, ValueError):
    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class HarnessError(CfgTestError):
    """The harness itself failed (sandbox setup, not the test body).

    ``partial_report`` carries whatever results were collected before the abort.
    """

    def __init__(self, message, partial_report=None):
        super().__init__(message)
        self.partial_report = partial_report


class InapplicableOperator(CfgTestError):
    pass


class SeedConfigFails(CfgTestError):
    def __init__(self, failing):
        self.failing = list(failing)
        super().__init__(f"seed configuration fails tests: {', '.join(self.failing)}")
