/** Bundled example: mirrors models/laser.scm in the repository root. */

export const LASER_EXAMPLE = `# Simplified airway laser surgery: a laser and a ventilator that must never
# be active at the same time, with the patient's oxygen saturation (SpO)
# falling 1/s while the ventilator is off and recovering 1/s while it is on.
#
# Activation is buffered through Syn: a device leaving Off first tells the
# other device to deactivate, waits one second, and only then turns on.
# The laser additionally refuses to start below 97 (oxygen reserve for the
# deactivation handshake) and holds in Syn until SpO confirms ventilation
# stopped; SpO bottoms out at exactly 95.
model laser

in event startLaser
event deactivateVen
event deactivateLaser

var SpO: int[0..100] = 100

chart Laser priority 1
  initial Off
  state On
  state Off
  state Syn
  transition Off -> Syn on startLaser if SpO >= 97 do raise deactivateVen
  transition Syn -> On after 1s if SpO <= 99
  transition On -> Off on deactivateLaser

chart Ventilator priority 2
  initial On
  state On
  state Off
  state Syn
  transition On -> Off on deactivateVen
  transition On -> On after 1s do SpO = SpO + 1
  transition Off -> Syn if SpO <= 96 do raise deactivateLaser
  transition Off -> Off after 1s do SpO = SpO - 1
  transition Syn -> On after 1s do SpO = SpO - 1
`;
