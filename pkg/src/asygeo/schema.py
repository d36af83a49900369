"""JSON schema for every document the command-line tool writes.

Non-finite floats are written as the strings ``"inf"``, ``"-inf"`` and
``"nan"`` so that output stays strict JSON.
"""

NUMBER = {"anyOf": [{"type": "number"}, {"enum": ["inf", "-inf", "nan"]}]}
NULLABLE_NUMBER = {"anyOf": [NUMBER, {"type": "null"}]}

SWEEP = {
    "type": "object",
    "required": ["samples", "limit_estimate", "limsup_estimate", "liminf_estimate",
                 "monotone", "oscillating", "fit_residual"],
    "properties": {
        "samples": {"type": "array", "items": {"type": "array", "items": NUMBER,
                                               "minItems": 2, "maxItems": 2}},
        "limit_estimate": NULLABLE_NUMBER,
        "limsup_estimate": NUMBER,
        "liminf_estimate": NUMBER,
        "monotone": {"type": "boolean"},
        "oscillating": {"type": "boolean"},
        "fit_residual": NUMBER,
        "notes": {"type": "array", "items": {"type": "string"}},
    },
}

RESULT_SCHEMAS = {
    "cap": {"type": "object", "required": ["p", "r", "log_cap", "scaled", "divergent"]},
    "condenser": {"type": "object", "required": ["p", "r", "r2", "log_cap", "root"]},
    "cap-sweep": SWEEP,
    "lambda-sweep": SWEEP,
    "eigen": {"type": "object", "required": ["p", "R", "lambda", "log_lambda", "scaled",
                                             "residual"]},
    "mazya": {"type": "object", "required": ["p", "log_mp", "argmin_r", "scaled"]},
    "entropy": {"type": "object", "required": ["entropy", "condition_1_2", "ratio_tail",
                                               "sv_ratio_tail"]},
    "verify-chain": {
        "type": "object",
        "required": ["entropy", "C", "Lambda", "Mazya", "verdicts", "tolerances"],
        "properties": {
            "entropy": NULLABLE_NUMBER, "C": NULLABLE_NUMBER, "Lambda": NULLABLE_NUMBER,
            "Mazya": NULLABLE_NUMBER,
            "verdicts": {"type": "array", "items": {
                "type": "object", "required": ["name", "pass"],
                "properties": {"name": {"type": "string"},
                               "pass": {"type": ["boolean", "null"]}}}},
        },
    },
    "example31": {"type": "object", "required": ["capacity_bound", "entropy_bounds",
                                                 "assertions", "conclusion"]},
    "example32": {"type": "object", "required": ["I1", "I2", "gap", "A", "B", "C", "A_bound",
                                                 "B_bound", "log_C_bound", "series_tail_bound",
                                                 "sweep", "assertions"]},
    "reproduce": {"type": "object", "required": ["models", "examples", "assertions"]},
}

OUTPUT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["command", "manifold", "status", "result"],
    "properties": {
        "command": {"enum": sorted(RESULT_SCHEMAS)},
        "manifold": {"type": ["string", "null"]},
        "status": {"enum": ["ok", "tolerance-failure"]},
        "result": {"type": "object"},
    },
    "allOf": [
        {"if": {"properties": {"command": {"const": name}}},
         "then": {"properties": {"result": schema}}}
        for name, schema in sorted(RESULT_SCHEMAS.items())
    ],
}
