"""Surface-code memory simulation under circuit noise plus a shuttling bus error."""

__version__ = "0.1.0"
