"""Configuration-driven sweep runner and bundled figure configs."""
