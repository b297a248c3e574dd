"""
============================================================================
COMMAND ROUTER
============================================================================
Router untuk subcommands CLI, dengan gaya seperti APIRouter: handler
didaftarkan dengan decorator, lalu router di-include ke parser utama.

Usage:
    router = CommandRouter()

    @router.command("train", help="Train reference model", args=[
        arg("--max-rounds", config="train.max_rounds", type=int),
    ])
    def train(ctx: RunContext) -> None:
        ...

Flag yang punya `config=` masuk ke RunConfig sebagai dotted key
(lihat resolve_run_config); flag lain dibaca langsung dari ctx.args.
Command bisa memaksa nilai config lewat `fixed=` (mis. finetune selalu
memakai placements frozen); nilai itu yang tercatat di run_config.json.
============================================================================
"""

import argparse
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Sequence, Set, Tuple

Handler = Callable[..., None]


class Arg(NamedTuple):
    flags: Tuple[str, ...]
    config: Optional[str]
    options: Dict[str, Any]


def arg(*flags: str, config: Optional[str] = None, **options: Any) -> Arg:
    """Satu argparse argument; `config` = dotted key RunConfig."""
    return Arg(flags=flags, config=config, options=options)


class Command(NamedTuple):
    name: str
    help: str
    handler: Handler
    args: Tuple[Arg, ...]
    fixed: Dict[str, Any]


class CommandRouter:
    def __init__(self) -> None:
        self.commands: List[Command] = []

    def command(
        self, name: str, *, help: str, args: Sequence[Arg] = (), fixed: Optional[Dict[str, Any]] = None
    ) -> Callable[[Handler], Handler]:
        """`fixed`: dotted config keys yang dipaksa command ini, di atas semua layers."""
        def decorator(func: Handler) -> Handler:
            if any(c.name == name for c in self.commands):
                raise ValueError(f"command {name!r} registered twice")
            self.commands.append(Command(name=name, help=help, handler=func, args=tuple(args), fixed=dict(fixed or {})))
            return func

        return decorator

    def include_router(self, router: "CommandRouter") -> None:
        for command in router.commands:
            self.command(command.name, help=command.help, args=command.args, fixed=command.fixed)(command.handler)

    def config_keys(self) -> Set[str]:
        return {a.config for c in self.commands for a in c.args if a.config}

    def build(self, subparsers: "argparse._SubParsersAction") -> None:
        """Satu subparser per command; handler disimpan di `args.handler`."""
        for command in self.commands:
            parser = subparsers.add_parser(command.name, help=command.help, description=command.help)
            for spec in command.args:
                options = dict(spec.options)
                if spec.config:
                    options.setdefault("dest", spec.config)
                    # None = tidak di-set, layer config lain yang menang
                    options.setdefault("default", None)
                parser.add_argument(*spec.flags, **options)
            parser.set_defaults(handler=command.handler, command=command.name, fixed=dict(command.fixed))
