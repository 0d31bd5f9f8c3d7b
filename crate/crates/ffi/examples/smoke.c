#include <stdio.h>
#include "fujita_lab.h"
int main(void) {
  FlProblemParams p = {3, 0.0, 0.0, -0.5, 3.0};
  FlExponentReport r;
  FlStatus s = fl_exponent_report(&p, FL_MASS_SIGN_POSITIVE, &r);
  printf("%s status=%d p_star=%g r=(%g,%g)\n", fl_version(), s, r.p_star, r.r_lo, r.r_hi);
  return s;
}
