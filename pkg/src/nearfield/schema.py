"""JSON schema for the scenario mapping, served to clients.

The same structure is accepted as YAML file text and as the JSON body of
POST /api/simulate. Units are part of the key names: _m meters, _deg
degrees, frequency in GHz. Defaults listed here are authoritative for
clients; the parser applies identical values.
"""

from __future__ import annotations


def _segment_props(extra: dict) -> dict:
    base = {
        "center_m": {
            "type": "array",
            "items": {"type": "number"},
            "minItems": 2,
            "maxItems": 2,
        },
        "length_m": {"type": "number", "exclusiveMinimum": 0},
        "orientation_deg": {"type": "number", "default": 0.0},
    }
    base.update(extra)
    return base


WAVEFRONT_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["gaussian", "focused", "bessel", "airy", "custom"]},
        "w0_m": {"type": "number", "exclusiveMinimum": 0},
        "focal_length_m": {"type": "number", "exclusiveMinimum": 0},
        "axicon_angle_deg": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 90},
        "beta": {"type": "number"},
        "path": {"type": "string"},
    },
}

SCENARIO_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "scenario",
    "type": "object",
    "required": ["physical", "grid", "tx"],
    "properties": {
        "physical": {
            "type": "object",
            "required": ["frequency_ghz"],
            "properties": {"frequency_ghz": {"type": "number", "exclusiveMinimum": 0}},
        },
        "grid": {
            "type": "object",
            "required": ["x_extent_m", "y_extent_m"],
            "properties": {
                "x_extent_m": {"type": "number", "exclusiveMinimum": 0},
                "y_extent_m": {"type": "number", "exclusiveMinimum": 0},
                "dy_m": {
                    "type": "number",
                    "exclusiveMinimum": 0,
                    "description": "transverse sample spacing; must be <= lambda/2; default lambda/2",
                },
                "dx_m": {
                    "type": "number",
                    "exclusiveMinimum": 0,
                    "description": "propagation step; default dy_m",
                },
            },
        },
        "tx": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["center_m", "length_m", "wavefront"],
                "properties": _segment_props(
                    {
                        "element_count": {"type": "integer", "minimum": 1},
                        "wavefront": WAVEFRONT_SCHEMA,
                    }
                ),
            },
        },
        "blockers": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["center_m", "length_m", "thickness_m"],
                "properties": _segment_props(
                    {
                        "thickness_m": {"type": "number", "exclusiveMinimum": 0},
                        "attenuation": {
                            "type": "number",
                            "minimum": 0,
                            "maximum": 1,
                            "default": 0.0,
                        },
                    }
                ),
            },
        },
        "reflectors": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["center_m", "length_m"],
                "properties": _segment_props(
                    {
                        "reflection_coefficient": {
                            "type": "number",
                            "minimum": 0,
                            "maximum": 1,
                            "default": 1.0,
                        },
                        "transmittance": {
                            "type": "number",
                            "minimum": 0,
                            "maximum": 1,
                            "default": 0.0,
                        },
                        "roughness": {
                            "type": "object",
                            "required": ["h_rms_m", "correlation_length_m"],
                            "properties": {
                                "h_rms_m": {"type": "number", "minimum": 0},
                                "correlation_length_m": {"type": "number", "exclusiveMinimum": 0},
                                "seed": {"type": "integer", "default": 0},
                                "phase_model": {
                                    "enum": ["cycles", "two_way"],
                                    "default": "cycles",
                                },
                            },
                        },
                    }
                ),
            },
        },
        "ris": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["center_m", "length_m", "element_count", "phases_deg"],
                "properties": _segment_props(
                    {
                        "element_count": {"type": "integer", "minimum": 1},
                        "phases_deg": {"type": "array", "items": {"type": "number"}},
                        "amplitudes": {
                            "type": "array",
                            "items": {"type": "number", "minimum": 0, "maximum": 1},
                        },
                    }
                ),
            },
        },
        "rx": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["center_m", "length_m", "element_count"],
                "properties": _segment_props(
                    {
                        "element_count": {"type": "integer", "minimum": 1},
                        "combining": {
                            "default": "digital",
                            "oneOf": [
                                {"const": "digital"},
                                {
                                    "type": "object",
                                    "required": ["kind", "weights"],
                                    "properties": {
                                        "kind": {"const": "analog"},
                                        "weights": {
                                            "type": "array",
                                            "items": {
                                                "type": "array",
                                                "items": {"type": "number"},
                                                "minItems": 2,
                                                "maxItems": 2,
                                            },
                                        },
                                    },
                                },
                            ],
                        },
                    }
                ),
            },
        },
        "solver": {
            "type": "object",
            "properties": {
                "max_bounce_depth": {"type": "integer", "minimum": 0, "default": 3},
                "source_energy_threshold": {
                    "type": "number",
                    "exclusiveMinimum": 0,
                    "default": 1e-3,
                },
                "padding_factor": {"type": "integer", "minimum": 1, "default": 2},
                "apodization_width": {
                    "type": "number",
                    "minimum": 0,
                    "exclusiveMaximum": 0.5,
                    "default": 0.05,
                },
            },
        },
    },
}
