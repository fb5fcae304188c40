"""k-normal surfaces in triangulated closed 3-manifolds."""

__version__ = "0.1.0"

from .coords import CoordinateVector, PieceType, System  # noqa: E402
from .triangulation import Triangulation, load_triangulation, parse_triangulation  # noqa: E402

__all__ = ["CoordinateVector", "PieceType", "System", "Triangulation", "load_triangulation",
           "parse_triangulation", "__version__"]


def load_schema(name: str) -> dict:
    """A shipped JSON schema, by short name (``"vector"``, ``"analyze"``, ...)."""
    import json
    from importlib import resources

    return json.loads(resources.files(__name__).joinpath("schemas", f"{name}.schema.json").read_text())
