"""Three-tier agent simulation with escalation, capability tokens and auditing."""
from .engine import (
    EscalationIntent,
    InboxItem,
    RoundRecord,
    SimState,
    SimTrace,
    evaluate_triggers,
    initial_state,
    load_scenario,
    run_round,
    run_sim,
)
from .scenario import AgentSpec, Decision, PolicyManifest, Scenario, SensorEvent, build_scenario, read_bundle
from .security import (
    AuditRecord,
    CapabilityToken,
    EscalationMessage,
    Rejection,
    SchemaContract,
    Tier,
    append_audit,
    mint_token,
    validate_escalation,
    verify_chain,
)

__all__ = [
    "AgentSpec", "AuditRecord", "CapabilityToken", "Decision", "EscalationIntent",
    "EscalationMessage", "InboxItem", "PolicyManifest", "Rejection", "RoundRecord", "Scenario",
    "SchemaContract", "SensorEvent", "SimState", "SimTrace", "Tier", "append_audit",
    "build_scenario", "evaluate_triggers", "initial_state", "load_scenario", "mint_token",
    "read_bundle", "run_round", "run_sim", "validate_escalation", "verify_chain",
]
