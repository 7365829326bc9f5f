"""The qudit virtual machine."""

from .vm import QVM, QVMError, frpr_exec

__all__ = ["QVM", "QVMError", "frpr_exec"]
