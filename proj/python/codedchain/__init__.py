"""Coded-verification blockchain simulator: field/coding primitives and the
deterministic network simulator, exposed from the C++ core."""

from codedchain._core import (  # noqa: F401
    Field,
    build_generator,
    encode_vector,
    rs_decode,
    fingerprint,
    find_irreducible,
    uov_keygen_sign_verify,
    run_scenario,
    default_scenario,
    __version__,
)

__all__ = [
    "Field",
    "build_generator",
    "encode_vector",
    "rs_decode",
    "fingerprint",
    "find_irreducible",
    "uov_keygen_sign_verify",
    "run_scenario",
    "default_scenario",
    "__version__",
]
