"""Endmember extraction from hyperspectral-image matrices via Hottopixx
LP models solved by row-and-column expansion."""

__version__ = "0.1.0"
