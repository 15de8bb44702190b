from typing import List, Optional


class ExtropyError(Exception):
    """Base exception for extropy operations"""
    pass


class ExtropyToolError(ExtropyError):
    """Exception raised by the domain tools"""
    def __init__(self, message: str, recovery_suggestions: List[str] = None):
        super().__init__(message)
        self.recovery_suggestions = recovery_suggestions or []


class ExtropyConfigError(ExtropyError):
    """Exception raised for configuration issues"""
    def __init__(self, message: str, field_path: Optional[str] = None):
        super().__init__(f"{field_path}: {message}" if field_path else message)
        self.field_path = field_path


class ExtropyFileError(ExtropyError):
    """Exception raised for output file operations"""
    pass


class DomainError(ExtropyToolError, ValueError):
    """Argument outside the domain of an operation"""
    pass


class WindowMismatchError(DomainError):
    def __init__(self, message: str = "window mismatch"):
        super().__init__(message if message.startswith("window mismatch") else f"window mismatch: {message}")


class MembershipError(DomainError):
    """Word is not a member of the enumerated list"""
    pass


class InadmissibleSequenceError(ExtropyToolError):
    """Interval sequence violates one of the admissibility conditions"""
    def __init__(self, condition: str, witness_k: Optional[int] = None, detail: str = ""):
        message = f"inadmissible sequence: violates {condition}"
        if witness_k is not None:
            message += f" at k={witness_k}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)
        self.condition = condition
        self.witness_k = witness_k


class RuntimeGuardError(ExtropyToolError):
    """A runtime guard refused the computation (halo or enumeration limits)"""
    pass


class InsufficientHaloError(RuntimeGuardError):
    def __init__(self, required_width: int, available_width: int = 0):
        super().__init__(
            f"insufficient halo: requires width >= {required_width}, available {available_width}",
            ["Widen the sampled window or reduce the number of steps",
             "Use the periodic or iid_refresh halo policy"],
        )
        self.required_width = required_width
        self.available_width = available_width


class EnumerationGuardError(RuntimeGuardError):
    def __init__(self, size_estimate: int, limit: int):
        super().__init__(
            f"enumeration refused: {size_estimate} words exceeds guard {limit}",
            ["Lower max_len or the alphabet cardinality"],
        )
        self.size_estimate = size_estimate
        self.limit = limit
