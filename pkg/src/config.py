"""
Configuration module for the Music Dependency Parser
Contains all constants and default settings
"""

from fractions import Fraction

# Head-sequence sentinels
ROOT = -1
NONE = -2

# Static feature value for rests (MIDI pitches occupy 0..127)
REST_PITCH_CODE = 128
MIDI_PITCH_RANGE = (0, 127)

# Metrical templates: numerator -> nested subdivision factors per grid level
METRICAL_TEMPLATES = {
    2: (1, 2, 2, 2, 2),
    3: (1, 3, 2, 2, 2),
    4: (1, 2, 2, 2, 2),
    6: (1, 2, 3, 2, 2),
    9: (1, 3, 3, 2, 2),
    12: (1, 2, 2, 3, 2),
}

# Value used when an onset lies on no grid of the template
OFF_GRID_STRENGTH = 5

# Chord symbol tables
PITCH_CLASSES = {'C': 0, 'D': 2, 'E': 4, 'F': 5, 'G': 7, 'A': 9, 'B': 11}
ACCIDENTALS = {'#': 1, 'b': -1}

CHORD_FORMS = ['major', 'minor', 'augmented', 'half-diminished', 'diminished', 'sus']
# Longest tokens first so that "sus" is not read as something shorter
FORM_TOKENS = [('sus', 5), ('m', 1), ('+', 2), ('%', 3), ('o', 4)]

CHORD_EXTENSIONS = ['6', 'minor 7', 'major 7']
EXTENSION_TOKENS = {'': 0, '6': 0, '7': 1, '^7': 2}

FORM_SYMBOLS = {0: '', 1: 'm', 2: '+', 3: '%', 4: 'o', 5: 'sus'}
EXTENSION_SYMBOLS = {0: '6', 1: '7', 2: '^7'}
ROOT_SYMBOLS = ['C', 'C#', 'D', 'Eb', 'E', 'F', 'F#', 'G', 'Ab', 'A', 'Bb', 'B']

# Corpus kinds
CORPUS_KINDS = ('chords', 'melody')

# Transposition ranges used for augmentation
MELODY_TRANSPOSITIONS = range(-12, 13)
CHORD_TRANSPOSITIONS = range(0, 12)

# Model defaults
MODEL_DEFAULTS = {
    'embed_dim': 96,
    'encoder_layers': 2,
    'hidden_dim': 64,
    'attention_heads': 4,
    'mlp_layers': 2,
    'dropout': 0.1,
    'max_relative_distance': 32,
    'arc_predictor': 'mlp',
}
EMBEDDING_INIT_STD = 0.02

# Training defaults
TRAIN_DEFAULTS = {
    'learning_rate': 4e-4,
    'weight_decay': 0.05,
    'warmup_steps': 50,
    'batch_size': 1,
    'loss_mode': 'both',
    'seed': 0,
}
DEFAULT_EPOCHS = {'chords': 60, 'melody': 20}

DECODER_MODES = ('greedy', 'eisner', 'cle')
LOSS_MODES = ('both', 'bce_only', 'ce_only')
CLI_LOSS_FLAGS = {'both': 'both', 'bce': 'bce_only', 'ce': 'ce_only'}

# Weight file format
WEIGHT_FILE_MAGIC = b'MDPW'
WEIGHT_FORMAT_VERSION = 1

# File paths
DEFAULT_OUTPUT_DIR = "outputs"

# Report export settings
REPORT_SHEETS = {
    'per_piece': 'Per-piece metrics',
    'summary': 'Summary',
    'loss_log': 'Loss log',
}
METRIC_NAMES = ['head_accuracy', 'arc_accuracy', 'span_accuracy', 'node_accuracy']

# Synthetic corpus defaults
SYNTHETIC_DURATIONS = (Fraction(1, 4), Fraction(1, 2), Fraction(1, 1))
