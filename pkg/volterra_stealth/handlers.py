# -*- coding: utf-8 -*-
"""
Decorators that turn plain command functions into CLI handlers.

A command takes the parsed ``argparse`` namespace and returns an exit code
(``None`` meaning success). :class:`CommandDecorator` gives a command
``before``, ``after`` and ``on_exception`` hooks, and :func:`before`,
:func:`after` and :func:`on_exception` build one-hook decorators from plain
functions. :class:`exit_codes` maps the package's exceptions to exit codes.
"""

import json
import logging
from functools import update_wrapper

from .config import apply_overrides, config_from_dict, preset_dict, read_document
from .core import ConfigError, DomainError, NumericalError, VolterraStealthError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONDITION_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


class CommandDecorator(object):
    """
    Base class for decorators wrapping CLI commands.

    Subclasses override :meth:`before`, :meth:`after` or
    :meth:`on_exception`.

    Usage::

        >>> class shout(CommandDecorator):
        ...     def before(self, args):
        ...         print('running with', args)
        ...         return args
        ...     def after(self, retval):
        ...         print('returned', retval)
        ...         return retval
        >>> @shout
        ... def command(args):
        ...     return 0
        >>> command({'preset': 'ex1'})
        running with {'preset': 'ex1'}
        returned 0
        0
        >>> class swallow(CommandDecorator):
        ...     def on_exception(self, exception):
        ...         return 3
        >>> @swallow
        ... def command(args):
        ...     raise Exception
        >>> command({})
        3
    """

    def __init__(self, handler):
        update_wrapper(self, handler)
        self.handler = handler

    def __call__(self, args):
        try:
            return self.after(self.handler(self.before(args)))
        except Exception as exception:
            return self.on_exception(exception)

    def before(self, args):
        return args

    def after(self, retval):
        return retval

    def on_exception(self, exception):
        raise exception


def before(func):
    """
    Run ``func`` on the arguments before the command; it returns the
    arguments the command receives.

    Usage::

        >>> @before(lambda args: dict(args, dt=0.01))
        ... def command(args):
        ...     return args['dt']
        >>> command({'dt': 0.001})
        0.01
    """

    class BeforeDecorator(CommandDecorator):
        def before(self, args):
            return func(args)

    return BeforeDecorator


def after(func):
    """
    Run ``func`` on the command's return value.

    Usage::

        >>> @after(lambda retval: 0 if retval is None else retval)
        ... def command(args):
        ...     pass
        >>> command({})
        0
    """

    class AfterDecorator(CommandDecorator):
        def after(self, retval):
            return func(retval)

    return AfterDecorator


def on_exception(func):
    """
    Return ``func(exception)`` when the command raises.

    Usage::

        >>> @on_exception(lambda exception: 2)
        ... def command(args):
        ...     raise ValueError('bad flag')
        >>> command({})
        2
    """

    class OnExceptionDecorator(CommandDecorator):
        def on_exception(self, exception):
            return func(exception)

    return OnExceptionDecorator


class exit_codes(CommandDecorator):
    """
    Map outcomes to process exit codes: ``None`` is success, configuration
    and argument errors exit 2, as do unwritable outputs; numerical failures
    exit 3.

    Usage::

        >>> from volterra_stealth.core import NumericalError
        >>> @exit_codes
        ... def command(args):
        ...     raise NumericalError('singular step')
        >>> command({})
        3
    """

    def after(self, retval):
        return EXIT_OK if retval is None else int(retval)

    def on_exception(self, exception):
        if isinstance(exception, (ConfigError, DomainError)):
            logger.error("%s", exception)
            return EXIT_USAGE
        if isinstance(exception, OSError):
            logger.error("cannot write output: %s", exception)
            return EXIT_USAGE
        if isinstance(exception, NumericalError):
            logger.error("numerical failure: %s", exception)
            return EXIT_NUMERICAL
        if isinstance(exception, VolterraStealthError):
            logger.error("%s", exception)
            return EXIT_NUMERICAL
        raise exception


@before
def resolve_config(args):
    """
    Attach ``args.system``: the preset or config file named on the command
    line with the command-line overrides applied on top.
    """
    if getattr(args, "preset", None) and getattr(args, "config", None):
        raise ConfigError("use either --config or --preset, not both")
    if getattr(args, "preset", None):
        document = preset_dict(args.preset)
    elif getattr(args, "config", None):
        document = read_document(args.config)
    else:
        raise ConfigError("a configuration is required: pass --config or --preset")
    document = apply_overrides(
        document,
        t_end=getattr(args, "t_end", None),
        dt=getattr(args, "dt", None),
        a=getattr(args, "attack_degree", None),
        h=getattr(args, "attack_weight", None),
        epsilon=getattr(args, "epsilon", None),
        feedback_sign=getattr(args, "feedback_sign", None),
    )
    args.document = document
    args.system = config_from_dict(document)
    return args


def write_json(path, payload):
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    logger.info("wrote %s", path)


__all__ = [
    "CommandDecorator",
    "after",
    "before",
    "exit_codes",
    "on_exception",
    "resolve_config",
    "write_json",
]
