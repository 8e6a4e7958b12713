"""
Run Configuration Schema.

Typed field declarations with constraints for the run configuration. A
field validates values coming from TOML and parses raw strings coming from
environment variables or command-line flags.
"""

from dataclasses import dataclass
from typing import Any


class SchemaError(Exception):
    """Base exception for schema-related errors."""

    pass


class ValidationError(SchemaError):
    """Raised when value validation fails."""

    pass


_BOOL_WORDS = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}


@dataclass
class ConfigField:
    """
    A configuration field with type and constraints.

    Attributes:
        type_: Expected type (int, float, str or bool)
        default: Default value
        description: Human-readable description, written as a TOML comment
        min: Inclusive lower bound for numbers
        max: Inclusive upper bound for numbers
        choices: Allowed values (optional)
        exclusive_min: Whether min itself is rejected
        env: Environment variable that overrides the TOML value
    """

    type_: type
    default: Any
    description: str = ""
    min: Any = None
    max: Any = None
    choices: list[Any] | None = None
    exclusive_min: bool = False
    env: str | None = None

    def __post_init__(self):
        if self.type_ not in (int, float, str, bool):
            raise SchemaError(f"Unsupported field type {self.type_.__name__}")
        if (self.min is not None or self.max is not None) and self.type_ not in (int, float):
            raise SchemaError(f"min/max constraints only supported for int and float, got {self.type_.__name__}")
        try:
            self.validate(self.default)
        except ValidationError as e:
            raise SchemaError(f"Default value {self.default!r} is invalid: {e}") from e
        if self.choices is not None and not isinstance(self.choices, list):
            raise SchemaError("choices must be a list")

    def coerce(self, value: Any) -> Any:
        """Widen ints to float for float fields; everything else must already match."""
        if self.type_ is float and isinstance(value, int) and not isinstance(value, bool):
            return float(value)
        return value

    def validate(self, value: Any) -> None:
        """
        Validate a value against this field's constraints.

        Raises:
            ValidationError: If validation fails
        """
        value = self.coerce(value)
        if not isinstance(value, self.type_) or (self.type_ is int and isinstance(value, bool)):
            raise ValidationError(f"Expected type {self.type_.__name__}, got {type(value).__name__}")

        if self.choices is not None and value not in self.choices:
            raise ValidationError(f"Value {value!r} not in allowed choices {self.choices}")

        if self.type_ in (int, float):
            if self.min is not None:
                if value < self.min or (self.exclusive_min and value == self.min):
                    bound = "greater than" if self.exclusive_min else "at least"
                    raise ValidationError(f"Value {value} must be {bound} {self.min}")
            if self.max is not None and value > self.max:
                raise ValidationError(f"Value {value} is greater than maximum {self.max}")

    def parse(self, raw: str) -> Any:
        """
        Parse and validate a raw string (environment variable or flag).

        Raises:
            ValidationError: If the string cannot be parsed or fails validation
        """
        text = raw.strip()
        try:
            if self.type_ is bool:
                if text.lower() not in _BOOL_WORDS:
                    raise ValueError(f"not a boolean: {raw!r}")
                value: Any = _BOOL_WORDS[text.lower()]
            elif self.type_ in (int, float):
                value = self.type_(text)
            else:
                value = text
        except ValueError as e:
            raise ValidationError(f"Cannot parse {raw!r} as {self.type_.__name__}: {e}") from e
        self.validate(value)
        return value


def validate_config(config: dict[str, Any], schema: dict[str, ConfigField]) -> dict[str, Any]:
    """
    Validate a (possibly partial) configuration dictionary against a schema.

    Returns:
        The configuration with float fields widened

    Raises:
        ValidationError: On unknown or invalid fields
    """
    result = {}
    for key, value in config.items():
        if key not in schema:
            raise ValidationError(f"Unknown configuration field: {key}")
        try:
            schema[key].validate(value)
        except ValidationError as e:
            raise ValidationError(f"Field '{key}': {e}") from e
        result[key] = schema[key].coerce(value)
    return result


def generate_default_config(schema: dict[str, ConfigField]) -> dict[str, Any]:
    """A dictionary with the default value of every field."""
    return {name: field.default for name, field in schema.items()}
