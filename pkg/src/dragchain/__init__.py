"""Drag-conditioned multi-object motion reasoning.

From a scene description and a user drag, infer motion trajectories for
every object, controlled and affected, via a five-stage reasoning state
machine over deterministic physics kernels. Ships with an annotation
harness and motion-consistency metrics for evaluating predictions.
"""

from .errors import (
    BackendUnavailable,
    DegenerateContact,
    DragchainError,
    FixtureSchemaInvalid,
    InvalidArgument,
    InvalidChain,
    InvalidDrag,
    NotFound,
    ParseError,
    UndefinedMetric,
)
from .model import (
    BBox,
    DragInput,
    InteractionType,
    LineSegment,
    Mask,
    Point2,
    Scene,
    SceneObject,
    StaticGeometry,
    Trajectory,
    Violation,
    resample_trajectory,
    validate_scene,
)
from .perception import (
    Detection,
    FixtureBackend,
    ObjectInventory,
    RemoteBackend,
    detect_objects,
    make_backend,
    perceive,
    refine_detections,
    segment_controlled,
)
from .physics import (
    BodyState,
    CollisionEvent,
    ballistic,
    collide,
    detect_collisions,
    lever_rotate,
    mirror_reflect,
    propagate_chain,
)
from .pipeline import (
    CandidateBundle,
    CandidateSet,
    PipelineConfig,
    PipelineResult,
    RelationGraph,
    SceneUnderstanding,
    StageTrace,
    ValidationReport,
    run_pipeline,
    stage1_understand,
    stage2_relations,
    stage3_interactions,
    stage4_rank,
    stage5_validate,
)
from .metrics import EvalPair, MetricResult, evaluate, match_objects, moc, objmc

__version__ = "0.1.0"
