from .app import create_app
from .backends import StubBackend

__all__ = ["create_app", "StubBackend"]
