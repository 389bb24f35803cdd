"""Forward models, measurement maps, and limit states for the benchmark
systems: simply supported plate, cantilever beam with mechanical arm, and
the BEM wind turbine with Gaussian-process wind."""

from .plate import PlateParams, plate_reactions
from .beam_arm import (
    ArmPose,
    BeamArmParams,
    arm_forward_kinematics,
    beam_limit_state,
    beam_support_reaction,
    motor_limit_states,
    motor_moments,
)
from .turbine import (
    TurbineParams,
    TurbineState,
    bem_solve,
    effective_normal_wind,
    flap_moment,
    rotor_step,
    rotor_thrust,
    shaft_torque,
    tower_stress,
    turbine_limit_states,
    turbine_power,
)
from .wind import WindField, WindFieldSpec, squared_exponential

__all__ = [
    "PlateParams", "plate_reactions",
    "ArmPose", "BeamArmParams", "arm_forward_kinematics", "beam_limit_state",
    "beam_support_reaction", "motor_limit_states", "motor_moments",
    "TurbineParams", "TurbineState", "bem_solve", "effective_normal_wind",
    "flap_moment", "rotor_step", "rotor_thrust", "shaft_torque",
    "tower_stress", "turbine_limit_states", "turbine_power",
    "WindField", "WindFieldSpec", "squared_exponential",
]
