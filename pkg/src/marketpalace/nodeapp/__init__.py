"""User-facing node: config, key lifecycle, daemon, local HTTP API."""
