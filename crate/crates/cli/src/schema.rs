//! Machine-readable description of the config document and result bundle.

use serde_json::{json, Value};

/// Combined schema document: the config format and the result bundle.
pub fn schema_document() -> Value {
    json!({
        "config": config_schema(),
        "results": results_schema(),
    })
}

pub fn results_schema() -> Value {
    json!({
        "$schema": "http://json-schema.org/draft-07/schema#",
        "title": "ResultBundle",
        "type": "object",
        "required": ["schema_version", "config_hash", "potential", "eps", "records", "diagnostics"],
        "properties": {
            "schema_version": { "type": "integer", "const": crate::runner::SCHEMA_VERSION },
            "config_hash": { "type": "string", "description": "sha-256 of the canonical config" },
            "potential": { "type": "string" },
            "eps": { "type": "array", "items": { "type": "number" } },
            "records": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["task", "eps", "ok", "value", "error", "timing_ms"],
                    "properties": {
                        "task": { "type": "string" },
                        "eps": { "type": ["number", "null"] },
                        "ok": { "type": "boolean" },
                        "value": { "description": "task-specific payload; scaled quantities are {mantissa, shift, ln_value_at_eps}" },
                        "error": { "type": ["string", "null"] },
                        "timing_ms": { "type": "number" }
                    }
                }
            },
            "diagnostics": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["eps", "eps1", "eta_hat"],
                    "properties": {
                        "eps": { "type": "number" },
                        "eps1": { "type": ["number", "null"] },
                        "eta_hat": { "type": ["number", "null"] }
                    }
                }
            },
            "compare": {
                "type": ["object", "null"],
                "properties": {
                    "rows": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["eps", "ratio", "eta_hat"],
                            "properties": {
                                "eps": { "type": "number" },
                                "ratio": { "type": "number" },
                                "eta_hat": { "type": ["number", "null"] }
                            }
                        }
                    },
                    "trend_improving": { "type": "boolean" }
                }
            }
        }
    })
}

pub fn config_schema() -> Value {
    json!({
        "$schema": "http://json-schema.org/draft-07/schema#",
        "title": "ExperimentConfig",
        "description": "TOML experiment description for the metastab runner",
        "type": "object",
        "required": ["potential", "eps", "delta", "tasks", "lattice"],
        "additionalProperties": false,
        "properties": {
            "potential": {
                "oneOf": [
                    {
                        "type": "string",
                        "description": "name of a built-in landscape (see list-catalog)"
                    },
                    {
                        "type": "object",
                        "required": ["inline", "growth_const"],
                        "properties": {
                            "inline": {
                                "type": "string",
                                "description": "polynomial in x1..xn, e.g. 0.25*x1^4 - 0.5*x1^2 + 0.25"
                            },
                            "growth_const": {
                                "type": "number",
                                "exclusiveMinimum": 0,
                                "description": "C0 in the growth bound F(x) >= |x|^2/C0 - C0"
                            }
                        }
                    }
                ]
            },
            "eps": {
                "type": "array",
                "items": { "type": "number", "exclusiveMinimum": 0 },
                "minItems": 1,
                "description": "noise levels, sorted strictly descending"
            },
            "delta": {
                "type": "number",
                "exclusiveMinimum": 0,
                "description": "island threshold below the communication height"
            },
            "tasks": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "string",
                    "enum": [
                        "critical_points", "network", "d_eps", "v_eps",
                        "capacity_geometric", "capacity_pde", "ek_classical",
                        "simulate", "exit_bound", "convex_checks"
                    ]
                }
            },
            "lattice": {
                "type": "object",
                "required": ["box", "h"],
                "properties": {
                    "box": {
                        "type": "array",
                        "items": {
                            "type": "array",
                            "items": { "type": "number" },
                            "minItems": 2,
                            "maxItems": 2
                        },
                        "description": "one [lo, hi] pair per dimension"
                    },
                    "h": { "type": "number", "exclusiveMinimum": 0 }
                }
            },
            "sim": {
                "type": "object",
                "required": ["dt", "max_steps", "paths", "target_radius"],
                "properties": {
                    "dt": { "type": "number", "exclusiveMinimum": 0 },
                    "max_steps": { "type": "integer", "minimum": 1 },
                    "paths": { "type": "integer", "minimum": 1 },
                    "target_radius": { "type": "number", "exclusiveMinimum": 0 }
                },
                "description": "required by the simulate task"
            },
            "seed": { "type": "integer", "minimum": 0, "default": 0 },
            "output": { "type": "string", "description": "output directory" },
            "pair": {
                "type": "array",
                "minItems": 2,
                "maxItems": 2,
                "items": { "type": "array", "items": { "type": "number" } },
                "description": "transition pair [x_a, x_b]; defaults to the catalog pair"
            }
        }
    })
}
