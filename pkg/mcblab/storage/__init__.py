from .artifact_store import ArtifactStore, read_table, render_batch_csv
from .config_file import config_from_mapping, load_config, merge_overrides, parse_config_text

__all__ = [
    "ArtifactStore",
    "read_table",
    "render_batch_csv",
    "config_from_mapping",
    "load_config",
    "merge_overrides",
    "parse_config_text",
]
