#include <math.h>
#include <stdio.h>
#include "neuroskin.h"

int main(void) {
    NsModel *model = NULL;
    if (ns_model_build(4, 2, 50.0, 15, 1e-3, 20, &model) != NS_STATUS_OK) {
        fprintf(stderr, "build: %s\n", ns_last_error());
        return 1;
    }
    size_t channels = ns_model_support_count(model);
    double input[20 * 3];
    for (size_t k = 0; k < 20; k++)
        for (size_t j = 0; j < channels; j++)
            input[k * channels + j] = 0.01 * sin(0.3 * (double)(k + 1));
    NsTrace *trace = NULL;
    if (ns_simulate(model, input, 20, channels, &trace) != NS_STATUS_OK) {
        fprintf(stderr, "simulate: %s\n", ns_last_error());
        return 1;
    }
    size_t rows = ns_trace_rows(trace);
    const double *data = ns_trace_data(trace);
    double self = -1.0;
    ns_rmse(data, data, rows, &self);
    if (ns_model_set_moduli(model, input, 3) != NS_STATUS_CONFIG || ns_last_error() == NULL)
        return 2;
    printf("%zu %zu %g %g\n", rows, ns_trace_columns(trace), data[rows - 1], self);
    ns_trace_free(trace);
    ns_model_free(model);
    return 0;
}
