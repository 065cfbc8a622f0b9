from localmax.models.model_suite import (
    Role,
    GeneratorOutput,
    QuadModel,
    build_model,
    comparator_apply,
    comparator_unary,
    classifier_scores,
    generate,
)
