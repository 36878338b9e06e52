"""
LangGraph workflow nodes.

Individual components of the seed-run pipeline:
- validators: Run configuration validation
- loaders: Problem construction and point sampling
- trainers: First stage and residual correction stage
- evaluators: Error reports at the best-loss parameters
- formatters: Run summary / failure records
"""
