"""Document warehouse with Boolean retrieval, explicit user sessions,
OLAP-style data marts, and non-repeating recommendations."""

__version__ = "0.1.0"

from .errors import (
    ApiError,
    ConflictError,
    DocmartError,
    NotFoundError,
    QuerySyntaxError,
    StoreError,
    ValidationError,
)
from .marts import (
    AccessEvent,
    BUILTIN_SPECS,
    Mart,
    MartEngine,
    MartSpec,
    build_cells,
    export_csv,
    rollup,
    slice_mart,
    year_over_year,
)
from .query import (
    ClassificationSpec,
    ExplorationView,
    ResultSet,
    canonical_order,
    classify,
    evaluate_query,
    explore,
    parse_query,
    to_text,
)
from .store import Store
from .usermodel import (
    Activity,
    DecisionalProblem,
    Evaluation,
    Profile,
    SessionModel,
    UserModel,
)
from .warehouse import (
    AttributeDescriptor,
    Document,
    EnrichmentSource,
    GapReport,
    IngestReport,
    MISSING_VALUE,
    SelectionFilter,
    Warehouse,
)

__all__ = [
    "__version__",
    "ApiError",
    "ConflictError",
    "DocmartError",
    "NotFoundError",
    "QuerySyntaxError",
    "StoreError",
    "ValidationError",
    "AccessEvent",
    "BUILTIN_SPECS",
    "Mart",
    "MartEngine",
    "MartSpec",
    "build_cells",
    "export_csv",
    "rollup",
    "slice_mart",
    "year_over_year",
    "ClassificationSpec",
    "ExplorationView",
    "ResultSet",
    "canonical_order",
    "classify",
    "evaluate_query",
    "explore",
    "parse_query",
    "to_text",
    "Store",
    "Activity",
    "DecisionalProblem",
    "Evaluation",
    "Profile",
    "SessionModel",
    "UserModel",
    "AttributeDescriptor",
    "Document",
    "EnrichmentSource",
    "GapReport",
    "IngestReport",
    "MISSING_VALUE",
    "SelectionFilter",
    "Warehouse",
]
