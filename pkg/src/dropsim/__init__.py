"""Packet-level discrete-event simulator for on/off TCP sources sharing a bottleneck."""

__version__ = "0.1.0"
