"""Consistency checking against the rule catalog.

A model that parses is not necessarily coherent: a threat chain can
name a detector with no detection spec, a fault can claim to originate
in the environment, a recovery-only connection can sit unused.  The
checker walks the model against a fixed catalog of rules and returns
findings; violations block simulation, warnings don't.

Run:  python3 demos/02_consistency_checking.py
"""

from fmaf import (
    blocking_violations,
    check,
    explain,
    format_report,
    has_violations,
    load_bundle,
    parse,
)

print("== A clean model ==")
nominal = load_bundle("nominal").model
findings = check(nominal)
print(f"nominal: {len(findings)} findings")
print()

print("== A model shipped with a deliberate defect ==")
fault3 = load_bundle("fault3").model
findings = check(fault3)
print(format_report(findings), end="")
print()

# The F3.1 chain says the fault originates with the Caller, an
# environment entity. Environment entities cannot originate faults, so
# that one chain is blocked while the other three still simulate.
for chain_id in sorted(fault3.chains):
    blockers = blocking_violations(findings, chain_id)
    state = "BLOCKED" if blockers else "ok"
    print(f"  chain {chain_id}: {state}")
print()

print("== Why is that a violation? ==")
print(explain("R2"))
print()

print("== Dangling references never reach the checker ==")
# Reference resolution is the parser's job; a chain naming an undeclared
# threat node is rejected with a positioned diagnostic before a model
# object even exists.
broken = """
sos Demo {
  cs A { nominal GoA }
  process GoA owner A { entry Step exits [Step] action Step 1t }
  error E1 "stuck"
  failure X1 "no service"
  chain C1 {
    fault Missing
    error E1
    failure X1
    origin A
    unrecoverable
  }
}
"""
result = parse(broken)
print(f"parse ok: {result.ok}")
for diag in result.diagnostics:
    print(f"  {diag}")
print()

print("== Warnings don't block ==")
# Structurally sound, but the recovery-only spare link is referenced by
# no recovery process, so it can never carry a message.
unused_spare = """
sos Warned {
  cs A "A" { nominal GA }
  cs B "B" { nominal GB }
  connection Spare: A <-> B { kind recovery_only }
  process GA owner A { entry a exits [a] action a 1t }
  process GB owner B { entry b exits [b] action b 1t }
}
"""
result = parse(unused_spare)
assert result.ok
findings = check(result.model)
print(format_report(findings), end="")
print(f"has_violations: {has_violations(findings)}  (simulation may proceed)")
