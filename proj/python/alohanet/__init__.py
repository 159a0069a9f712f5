"""Delay-constrained utility optimization for multihop slotted-Aloha networks."""

from ._alohanet import gen, link_delay, mac_opt, mindc, validate, xlayer_opt

__all__ = ["gen", "link_delay", "mac_opt", "mindc", "validate", "xlayer_opt"]
