"""Shared environment configuration constants for the DUMA MRC package."""
import os

# --- Logging ---
LOG_DIR = os.getenv("DUMA_LOG_DIR", "./logs")
LOG_LEVEL = os.getenv("DUMA_LOG_LEVEL", "INFO")

# --- Run artifacts ---
RUNS_DIR = os.getenv("DUMA_RUNS_DIR", "./runs")

# --- Datasets (optional local downloads) ---
DREAM_DIR = os.getenv("DUMA_DREAM_DIR")
RACE_DIR = os.getenv("DUMA_RACE_DIR")

# --- File names inside a run directory ---
MANIFEST_FILE = "manifest.json"
METRICS_FILE = "metrics.jsonl"
VOCAB_FILE = "vocab.txt"
BEST_CHECKPOINT_FILE = "best.ckpt"
