"""
Subcommand implementations behind main.py (synth, infer, train, score, grad-check)
"""
