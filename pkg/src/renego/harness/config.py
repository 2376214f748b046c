"""Experiment configuration: one JSON document drives every subcommand."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from ..agents import (
    BoNAgent,
    BoNConfig,
    BucketingConfig,
    Persona,
    default_personas,
)
from ..env import DEFAULT_MESSAGE_ALPHABET, GameSpec, Variant
from ..normal_form import FTPLConfig, NormalFormGame
from ..oracle import r1_max


class ConfigError(ValueError):
    """The configuration document is invalid; the message says where."""


DEFAULT_THEORY = {
    "theorem_instances": 200,
    "prop1_policies": 50,
    "pi_instances": 50,
    "theorem_budget": 2_000_000,
    "br_budget": 8_000_000,
    "regret_games": 3,
    "regret_grid": [100, 1000, 10000],
    "regret_seeds": 20,
    "rate_constant": 3.0,
    "master_seed": 0,
}


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    game: dict = field(default_factory=dict)
    agents: dict = field(default_factory=dict)
    bon: dict = field(default_factory=dict)
    sfp: dict = field(default_factory=dict)
    matrix: dict = field(default_factory=dict)
    run: dict = field(default_factory=lambda: {"episodes": 20, "seeds": [0],
                                               "out_dir": "runs"})
    theory: dict = field(default_factory=dict)

    # -- document round trip -------------------------------------------------

    @staticmethod
    def from_json(text: str) -> "ExperimentConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        known = {"name", "game", "agents", "bon", "sfp", "matrix", "run", "theory"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        config = ExperimentConfig(**{k: doc[k] for k in doc})
        config.validate()
        return config

    @staticmethod
    def load(path) -> "ExperimentConfig":
        return ExperimentConfig.from_json(Path(path).read_text())

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    # -- validation ----------------------------------------------------------

    def validate(self):
        run = self.run
        if not isinstance(run.get("episodes", 20), int) or run.get("episodes", 20) < 1:
            raise ConfigError("run.episodes must be a positive integer")
        seeds = run.get("seeds", [0])
        if not seeds or not all(isinstance(s, int) for s in seeds):
            raise ConfigError("run.seeds must be a nonempty list of integers")
        for side_key, section in (self.agents or {}).items():
            if side_key not in ("agent1", "agent2"):
                raise ConfigError(f"agents section has unknown key {side_key!r}")
            kind = section.get("kind")
            if kind not in ("persona", "bon", "bridge_subprocess", "bridge_http"):
                raise ConfigError(f"{side_key}.kind {kind!r} is not a provider kind")
            if kind == "bon" and "base" not in section:
                raise ConfigError(f"{side_key}: bon provider needs a base section")
        if self.game:
            self.build_spec()  # raises on bad game parameters

    # -- builders -------------------------------------------------------------

    def build_spec(self) -> GameSpec:
        doc = dict(self.game)
        variant = Variant(doc.pop("variant", "buyer_seller"))
        if "price_grid" in doc:
            doc["price_grid"] = tuple(float(q) for q in doc["price_grid"])
        if "transfer_grid" in doc and doc["transfer_grid"] is not None:
            doc["transfer_grid"] = tuple((int(a), int(b)) for a, b in doc["transfer_grid"])
        if "message_alphabet" in doc:
            doc["message_alphabet"] = tuple(doc["message_alphabet"])
        try:
            spec = GameSpec(variant=variant, **doc)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad game section: {exc}") from exc
        if spec.variant == Variant.RESOURCE_EXCHANGE and spec.exchange_norm is None:
            spec = replace(spec, exchange_norm=r1_max(spec).value)
        return spec

    def build_bon_config(self) -> BoNConfig:
        doc = {k: v for k, v in self.bon.items() if k != "bucketing"}
        try:
            return BoNConfig(**doc)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad bon section: {exc}") from exc

    def build_bucketing(self) -> BucketingConfig:
        try:
            return BucketingConfig(**self.bon.get("bucketing", {}))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad bon.bucketing section: {exc}") from exc

    def build_provider(self, side_key: str, spec: GameSpec, seed: int):
        section = (self.agents or {}).get(side_key)
        if section is None:
            raise ConfigError(f"agents.{side_key} section is missing")
        kind = section["kind"]
        if kind == "persona":
            return self._persona(section, spec)
        if kind == "bon":
            base = self._persona(section["base"], spec)
            return BoNAgent(base, self.build_bon_config(), run_seed=seed,
                            bucketing=self.build_bucketing())
        # bridge providers
        from ..bridge import spawn_external_policy

        episodes = self.run.get("episodes", 20)
        if kind == "bridge_subprocess":
            argv = section.get("argv")
            if not argv:
                raise ConfigError(f"{side_key}: bridge_subprocess needs argv")
            return spawn_external_policy(
                spec, episodes, argv=argv,
                template_id=section.get("template_id", "act"),
                persona_template=section.get("persona_template"),
                timeout=section.get("timeout", 10.0),
                retries=section.get("retries", 2))
        url = section.get("url")
        if not url:
            raise ConfigError(f"{side_key}: bridge_http needs url")
        return spawn_external_policy(
            spec, episodes, url=url,
            template_id=section.get("template_id", "act"),
            persona_template=section.get("persona_template"),
            timeout=section.get("timeout", 10.0),
            retries=section.get("retries", 2))

    def _persona(self, section: dict, spec: GameSpec) -> Persona:
        family = section.get("family")
        if family is None:
            raise ConfigError("persona section needs a family")
        catalog = default_personas(spec)
        if family not in catalog:
            raise ConfigError(f"unknown persona family {family!r}")
        persona = catalog[family]
        overrides = section.get("params", {})
        if overrides:
            try:
                persona = Persona(replace(persona.params, **overrides))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad persona params: {exc}") from exc
        return persona

    def build_ftpl(self) -> FTPLConfig:
        doc = {k: v for k, v in self.sfp.items()
               if k in ("noise_kind", "eta_scale", "monte_carlo_draws")}
        try:
            return FTPLConfig(**doc)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad sfp section: {exc}") from exc

    def build_matrix_game(self, base_dir: Path = Path(".")) -> NormalFormGame:
        if "game_matrix" in self.sfp:
            return NormalFormGame.from_json(json.dumps(self.sfp["game_matrix"]))
        path = self.sfp.get("game_matrix_path")
        if not path:
            raise ConfigError("sfp section needs game_matrix or game_matrix_path")
        return NormalFormGame.from_json((base_dir / path).read_text())

    def theory_params(self) -> dict:
        params = dict(DEFAULT_THEORY)
        unknown = set(self.theory) - set(DEFAULT_THEORY)
        if unknown:
            raise ConfigError(f"unknown theory keys: {sorted(unknown)}")
        params.update(self.theory)
        return params


def default_config() -> ExperimentConfig:
    """The experiment defaults: cost 43, budget 63, ten turns, twenty
    episodes, five candidates."""
    return ExperimentConfig(
        name="buyer-seller-default",
        game={
            "variant": "buyer_seller",
            "horizon": 10,
            "starter": 2,
            "production_cost": 43.0,
            "budget": 63.0,
            "agent1_role": "seller",
            "price_grid": [float(q) for q in range(0, 101)],
            "message_alphabet": list(DEFAULT_MESSAGE_ALPHABET),
        },
        agents={
            "agent1": {"kind": "bon", "base": {"kind": "persona", "family": "rational"}},
            "agent2": {"kind": "persona", "family": "rational"},
        },
        bon={"n_candidates": 5, "generation_mode": "brainstorm", "rollouts": 3,
             "sharpening": 1},
        matrix={"personas": ["rational", "cunning", "desperate", "tit_for_tat",
                             "fairness", "emotional", "brainstorm_mix"],
                "episodes": 8, "seeds": [0, 1, 2, 3]},
        run={"episodes": 20, "seeds": list(range(10)), "out_dir": "runs"},
    )
