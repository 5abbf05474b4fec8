"""Verification and experiment orchestration backend for formal theorem-proving RL.

Subpackages:
  repl     -- pooled Lean REPL workers with per-worker environment caching
  bench    -- benchmark loading, decontamination, pass@k evaluation
  curation -- problem store lifecycle: building, pruning, judging, negation filtering

Top-level modules:
  pattern  -- reasoning-trace parsing and structural format filters
  verify   -- batch proof verification and reward mapping
  service  -- HTTP front end for the verifier
  rollout  -- RL iteration orchestration and per-sample objective terms
  policy   -- policy client contract plus scripted mocks
  cli      -- the `proofpipe` command
"""

__version__ = "0.1.0"

SCHEMA_VERSION = "1.0"
