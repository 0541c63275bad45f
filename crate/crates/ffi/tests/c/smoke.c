#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "rhsim.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        RhsimStatus s_ = (call);                                           \
        if (s_ != RHSIM_STATUS_OK) {                                       \
            const char *m_ = rhsim_last_error_message();                   \
            fprintf(stderr, "%s -> %d: %s\n", #call, s_, m_ ? m_ : "?");   \
            return 1;                                                      \
        }                                                                  \
    } while (0)

static char *slurp(const char *path) {
    FILE *f = fopen(path, "rb");
    if (!f) return NULL;
    fseek(f, 0, SEEK_END);
    long n = ftell(f);
    rewind(f);
    char *buf = malloc(n + 1);
    if (fread(buf, 1, n, f) != (size_t)n) { fclose(f); free(buf); return NULL; }
    buf[n] = 0;
    fclose(f);
    return buf;
}

int main(int argc, char **argv) {
    if (argc < 2) return 2;
    char *text = slurp(argv[1]);
    if (!text) return 2;

    RhsimModel *model = NULL;
    CHECK(rhsim_model_from_robot_text(text, &model));
    free(text);
    size_t n = rhsim_model_dof(model);

    double q[64] = {0}, qd[64] = {0}, tau[64] = {0}, qdd[64], back[64];
    for (size_t i = 0; i < n; i++) { q[i] = 0.1 * (double)i; qd[i] = -0.05 * (double)i; tau[i] = 10.0 * (double)i; }
    CHECK(rhsim_forward_dynamics(model, q, qd, tau, 9.8, qdd));
    CHECK(rhsim_inverse_dynamics(model, q, qd, qdd, 9.8, back));
    double worst = 0.0;
    for (size_t i = 0; i < n; i++) worst = fmax(worst, fabs(back[i] - tau[i]));

    RhsimSim *sim = NULL;
    CHECK(rhsim_sim_new(model, RHSIM_INTEGRATOR_SYMPLECTIC_EULER, 1.0 / 60.0, 16, 9.8, &sim));
    rhsim_model_free(model);
    CHECK(rhsim_sim_set_command(sim, 0, 1.0));
    for (int k = 0; k < 60; k++) CHECK(rhsim_sim_step(sim));
    double t = 0.0;
    CHECK(rhsim_sim_state(sim, &t, q, NULL));
    if (rhsim_sim_set_command(sim, n, 1.0) != RHSIM_STATUS_INVALID_ARGUMENT) return 3;
    if (rhsim_last_error_message() == NULL) return 4;
    rhsim_sim_free(sim);

    printf("dof=%zu roundtrip=%.3e t=%.6f q0=%.6f\n", n, worst, t, q[0]);
    return 0;
}
