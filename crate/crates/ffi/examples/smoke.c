#include <stdio.h>
#include "plurality.h"

int main(void) {
    uint64_t counts[2] = {2, 1};
    PlConfiguration *c = NULL;
    if (pl_configuration_new(counts, 2, &c) != PL_STATUS_OK) return 10;
    double p[2];
    if (pl_pick_probabilities_3maj(c, p, 2) != PL_STATUS_OK) return 11;
    PlChain *ch = NULL;
    if (pl_chain_build(2, 2, "3maj", &ch) != PL_STATUS_OK) return 12;
    uint64_t mid[2] = {1, 1};
    size_t idx = 0;
    double t = 0.0;
    if (pl_chain_state_index(ch, mid, 2, &idx) != PL_STATUS_OK) return 13;
    if (pl_chain_absorption_time(ch, idx, &t) != PL_STATUS_OK) return 14;
    PlStatus bad = pl_rule_parse("k=3\n0 0 1 -> 2\n", NULL);
    printf("%s %.6f %.6f %.3f %d\n", pl_version(), p[0], p[1], t, (int)bad);
    pl_chain_free(ch);
    pl_configuration_free(c);
    return 0;
}
