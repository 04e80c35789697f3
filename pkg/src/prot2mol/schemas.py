"""JSON schemas for the ``evaluate`` and ``dock-eval`` reports."""

import jsonschema

_NUM = {"type": ["number", "null"]}
_INT = {"type": "integer", "minimum": 0}

_PROTEIN_ROW = {
    "type": "object",
    "required": ["protein_id", "fcd", "snn", "n_generated", "n_actives"],
    "properties": {
        "protein_id": {"type": "string"},
        "fcd": _NUM,
        "snn": _NUM,
        "n_generated": _INT,
        "n_actives": _INT,
    },
}

_SKIP_ROW = {
    "type": "object",
    "required": ["protein_id", "reason"],
    "properties": {"protein_id": {"type": "string"}, "reason": {"type": "string"}},
}

TABLE3_COLUMNS = ("Valid", "Unique", "Novel", "FCD", "Scaf", "SNN")

EVALUATE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["format", "table3", "table4", "jsd_matrix", "per_protein", "reference", "metadata"],
    "properties": {
        "format": {"const": "prot2mol-evaluate-v1"},
        "table3": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["model", "decoding", *TABLE3_COLUMNS, "Frag", "IntDiv", "IntDiv2",
                             "Filters", "n_generated"],
                "properties": {
                    "model": {"type": "string"},
                    "decoding": {"type": "string"},
                    **{c: _NUM for c in (*TABLE3_COLUMNS, "Frag", "IntDiv", "IntDiv2", "Filters")},
                    "n_generated": _INT,
                },
            },
        },
        "table4": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["model", "decoding", "JSD_FCD", "JSD_SNN", "n_test", "n_reference"],
                "properties": {
                    "model": {"type": "string"},
                    "decoding": {"type": "string"},
                    "JSD_FCD": _NUM,
                    "JSD_SNN": _NUM,
                    "n_test": _INT,
                    "n_reference": _INT,
                    "reason": {"type": ["string", "null"]},
                },
            },
        },
        "jsd_matrix": {
            "type": "object",
            "required": ["labels", "fcd", "snn"],
            "properties": {
                "labels": {"type": "array", "items": {"type": "string"}},
                "fcd": {"type": "array", "items": {"type": "array", "items": _NUM}},
                "snn": {"type": "array", "items": {"type": "array", "items": _NUM}},
            },
        },
        "per_protein": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["test", "skipped"],
                "properties": {
                    "test": {"type": "array", "items": _PROTEIN_ROW},
                    "skipped": {"type": "array", "items": _SKIP_ROW},
                },
            },
        },
        "reference": {
            "type": "object",
            "required": ["rows", "skipped"],
            "properties": {
                "rows": {"type": "array", "items": _PROTEIN_ROW},
                "skipped": {"type": "array", "items": _SKIP_ROW},
            },
        },
        "metadata": {
            "type": "object",
            "required": ["embedder", "fcd_warning", "seed"],
        },
    },
}

_RESULT = {
    "type": ["object", "null"],
    "required": ["auc", "u_statistic", "p_value", "n_pos", "n_neg", "significant"],
    "properties": {
        "auc": {"type": "number", "minimum": 0, "maximum": 1},
        "u_statistic": {"type": "number"},
        "p_value": {"type": "number", "minimum": 0, "maximum": 1},
        "n_pos": _INT,
        "n_neg": _INT,
        "significant": {"type": "boolean"},
    },
}

PAIRING_NAMES = (
    "active_vs_generated",
    "active_vs_others",
    "generated_vs_others",
    "generated_vs_random",
    "active_vs_random",
)

DOCK_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["alpha", "group_cap", "seed", "test", "targets", "excluded_targets",
                 "aggregate", "table5"],
    "properties": {
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "group_cap": _INT,
        "seed": _INT,
        "test": {"type": "string"},
        "targets": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["target_id", "group_sizes", "comparisons", "excluded"],
                "properties": {
                    "target_id": {"type": "string"},
                    "group_sizes": {"type": "object", "additionalProperties": _INT},
                    "excluded": {"type": "boolean"},
                    "comparisons": {
                        "type": "object",
                        "required": list(PAIRING_NAMES),
                        "additionalProperties": {
                            "type": "object",
                            "required": ["result", "reason"],
                            "properties": {
                                "result": _RESULT,
                                "reason": {"type": ["string", "null"]},
                            },
                        },
                    },
                },
            },
        },
        "excluded_targets": {"type": "array", "items": {"type": "string"}},
        "aggregate": {
            "type": "object",
            "required": list(PAIRING_NAMES),
            "additionalProperties": {
                "type": "object",
                "required": ["n_significant", "n_tested"],
            },
        },
        "table5": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["target_id", "pairing", "p_value", "auc", "significant",
                             "excluded_target"],
                "properties": {
                    "target_id": {"type": "string"},
                    "pairing": {"enum": list(PAIRING_NAMES)},
                    "p_value": _NUM,
                    "auc": _NUM,
                    "significant": {"type": ["boolean", "null"]},
                    "excluded_target": {"type": "boolean"},
                },
            },
        },
    },
}


def validate_evaluate(report):
    jsonschema.validate(report, EVALUATE_SCHEMA)


def validate_dock(report):
    jsonschema.validate(report, DOCK_SCHEMA)
