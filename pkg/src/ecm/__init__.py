"""Typed content-binding engine built on an abstract machine for content management."""

from .amcm import (
    MachineError, MachineState, Program, eval_expr, exec_command, parse_program,
    render_command, run, trace,
)
from .content_model import (
    DigitalObject, MetaCollection, Slot, Stage, VariableDomain, compress,
    domain_members, individualize, meta_compress, parse_predicate, stage_of,
)
from .personalization import (
    PersonalizationContext, PersonalizationRule, RegistrationStatus,
    access_allowed, apply_functional, parse_context,
)
from .schema import compile_meta, compile_schema, emit_ddl
from .template import (
    ModelFile, bind, compile_binding_program, list_unbound, parse_document,
    parse_model, render,
)
from .values import typecheck

__version__ = "0.1.0"
