from nvreflector.geo.collection import (
    AngularHistogram,
    InvalidApertureError,
    angular_distribution_geo,
    collection_efficiency_geo,
    trace_ensemble,
)
from nvreflector.geo.fresnel import brewster_angle, critical_angle, fresnel_power
from nvreflector.geo.rays import ExitRecord, ExitSurface, Ray, sample_dipole_rays
from nvreflector.geo.tracer import DeviceDomainError, paraboloid_intersect, trace_ray

__all__ = [
    "AngularHistogram", "DeviceDomainError", "ExitRecord", "ExitSurface", "InvalidApertureError",
    "Ray", "angular_distribution_geo", "brewster_angle", "collection_efficiency_geo",
    "critical_angle", "fresnel_power", "paraboloid_intersect", "sample_dipole_rays",
    "trace_ensemble", "trace_ray",
]
