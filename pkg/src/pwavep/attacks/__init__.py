from pwavep.attacks.gradient import attack_target, fgsm_attack, pgd_attack
from pwavep.attacks.addition import addition_init, point_addition_attack
from pwavep.attacks.spectral import run_attack, spectral_band_attack

__all__ = [
    "attack_target",
    "fgsm_attack",
    "pgd_attack",
    "addition_init",
    "point_addition_attack",
    "run_attack",
    "spectral_band_attack",
]
