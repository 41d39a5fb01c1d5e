"""Chart-based Riemannian tensor calculus on jets."""

from .charts import (
    Chart,
    DomainConstraintError,
    GeometryError,
    MetricError,
    MetricPatch,
    OneForm,
    ScalarField,
    TensorValue,
    VectorField,
)
from .local import LocalGeometry
from .ops import (
    christoffel,
    covariant_derivative_vector,
    divergence,
    grad,
    hessian,
    laplacian,
    lie_derivative_metric,
    metric_at,
    ricci,
    ricci_operator,
    riemann,
    scalar_curvature,
    scalar_curvature_derivatives,
    vector_field_norms,
)

__all__ = [
    "Chart",
    "DomainConstraintError",
    "GeometryError",
    "LocalGeometry",
    "MetricError",
    "MetricPatch",
    "OneForm",
    "ScalarField",
    "TensorValue",
    "VectorField",
    "christoffel",
    "covariant_derivative_vector",
    "divergence",
    "grad",
    "hessian",
    "laplacian",
    "lie_derivative_metric",
    "metric_at",
    "ricci",
    "ricci_operator",
    "riemann",
    "scalar_curvature",
    "scalar_curvature_derivatives",
    "vector_field_norms",
]
