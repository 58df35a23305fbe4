"""Jets of formal first integrals from linearized higher variational equations."""

__version__ = "0.1.0"
