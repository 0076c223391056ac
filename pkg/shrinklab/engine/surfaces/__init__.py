"""
Surface registry and factory.

Library surfaces are registered by name and can be created by name with
keyword parameters; serialized surfaces are restored by their type tag.
"""

from typing import Any, Callable, Dict, List, Optional

from ..errors import GeometryError
from . import library
from .base import SCHEMA_TAG, BaseSurface, EdgeSet
from .curve import DiscreteCurve
from .product import RoundProduct
from .profile import ProfileSurface

# Surface registry
_surfaces: Dict[str, Callable[..., Any]] = {}

_types: Dict[str, Any] = {
    DiscreteCurve.kind: DiscreteCurve,
    ProfileSurface.kind: ProfileSurface,
    RoundProduct.kind: RoundProduct,
}


def register_surface(name: str, factory: Callable[..., Any]):
    """Register a surface factory."""
    _surfaces[name] = factory


def get_surface_factory(name: str) -> Optional[Callable[..., Any]]:
    """Get a surface factory by name."""
    return _surfaces.get(name)


def create_surface(name: str, **kwargs) -> Any:
    """Create a library surface by name.

    Raises:
        KeyError: If no factory is registered under ``name``.
    """
    factory = _surfaces.get(name)
    if factory is None:
        raise KeyError(f"Unknown surface: {name}")
    return factory(**kwargs)


def list_registered_surfaces() -> List[str]:
    """List all registered surface names."""
    return list(_surfaces.keys())


def surface_from_dict(data: Dict[str, Any]) -> Any:
    """Restore a surface from its serialized record.

    Raises:
        GeometryError: On an unknown schema or type tag.
    """
    if data.get("schema") != SCHEMA_TAG:
        raise GeometryError(f"unsupported surface schema: {data.get('schema')!r}")
    cls = _types.get(data.get("type"))
    if cls is None:
        raise GeometryError(f"unknown surface type: {data.get('type')!r}")
    return cls.from_dict(data)


# Register built-in surfaces
register_surface("circle", library.circle)
register_surface("ellipse", library.ellipse)
register_surface("line", library.line)
register_surface("sphere", library.sphere)
register_surface("ellipsoid", library.ellipsoid)
register_surface("cylinder", library.cylinder)
register_surface("dumbbell", library.dumbbell)
register_surface("torus", library.torus)
register_surface("round_product", library.round_product)

__all__ = [
    "SCHEMA_TAG",
    "BaseSurface",
    "EdgeSet",
    "DiscreteCurve",
    "ProfileSurface",
    "RoundProduct",
    "register_surface",
    "get_surface_factory",
    "create_surface",
    "list_registered_surfaces",
    "surface_from_dict",
]
