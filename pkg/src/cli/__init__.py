"""
CLI Module
Layered settings, argument parsing and the lppd.py commands
"""
from .settings import DEFAULTS, ENV_PREFIX, Settings
from .parser import EXPERIMENTS, LppdArgumentParser, build_parser, settings_overrides
from .artifacts import find_normalization, load_field, read_normalization, save_field, write_normalization, write_trace
from .commands import (
    COMMANDS,
    EFFECTIVE_CONFIG,
    cmd_eval,
    cmd_experiment,
    cmd_fit_net,
    cmd_fit_pixel,
    cmd_gradcheck,
    cmd_infer,
    cmd_plot_intensity,
    cmd_synth,
)

__all__ = [
    'DEFAULTS', 'ENV_PREFIX', 'Settings',
    'EXPERIMENTS', 'LppdArgumentParser', 'build_parser', 'settings_overrides',
    'find_normalization', 'load_field', 'read_normalization', 'save_field', 'write_normalization', 'write_trace',
    'COMMANDS', 'EFFECTIVE_CONFIG', 'cmd_eval', 'cmd_experiment', 'cmd_fit_net', 'cmd_fit_pixel',
    'cmd_gradcheck', 'cmd_infer', 'cmd_plot_intensity', 'cmd_synth',
]
