"""Entry point: `python -m model_server`.

Env vars: MODEL_PATH (directory with classifier/ and mlm/ checkpoints),
PORT (default 8000).  MODEL_STUB=1 serves the deterministic stub backend
for local testing; with neither set, endpoints answer 503 until a model
is available.
"""
import os

import uvicorn

from .app import create_app
from .backends import StubBackend


def build_backend():
    if os.environ.get("MODEL_STUB") == "1":
        return StubBackend()
    model_path = os.environ.get("MODEL_PATH")
    if model_path:
        from .backends import TransformersBackend

        return TransformersBackend(model_path)
    return None


def main():
    app = create_app(build_backend())
    uvicorn.run(app, host="0.0.0.0", port=int(os.environ.get("PORT", "8000")))


if __name__ == "__main__":
    main()
