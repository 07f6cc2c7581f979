from .base import (  # noqa: F401
    INPUT_NODES,
    NODE_COUNT,
    OUTPUT_NODES,
    Brain,
    CompiledBrain,
    Gate,
    Source,
    brain_from_dump,
    connection_count,
    decode,
    decode_gene,
    dump_brain,
)
from .update import (  # noqa: F401
    ANSWER_N,
    ANSWER_S,
    NO_ANSWER,
    NodeState,
    answer_codes,
    read_answer,
    run_constant_input,
    step,
    step_batch,
)
