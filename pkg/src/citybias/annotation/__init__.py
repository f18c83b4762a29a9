from .service import (
    AggregatedLabel,
    Annotator,
    AnnotationService,
    Judgment,
    LABEL_DISCRIMINATION,
    LABEL_NO_DISCRIMINATION,
    SENSITIVITY_NOTICE,
    Task,
)

__all__ = [
    "AggregatedLabel",
    "Annotator",
    "AnnotationService",
    "Judgment",
    "LABEL_DISCRIMINATION",
    "LABEL_NO_DISCRIMINATION",
    "SENSITIVITY_NOTICE",
    "Task",
]
