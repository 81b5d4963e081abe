/* kernel_star2d4r_omp_tasks_blocking.c: target target_star2d4r (dfc9ec7b53b8f5d7) */
#include <stddef.h>
#include <stdlib.h>
#include <omp.h>

#define U_IDX(i0, i1) ((size_t)(((i0) + 4) * 24 + ((i1) + 4)))
#define U_LEN 576
#define V_IDX(i0, i1) ((size_t)(((i0) + 4) * 24 + ((i1) + 4)))
#define V_LEN 576

static void map_0(float *u, float *v) {
    /* kernel_star2d4r region 0: [0, 16) x [0, 16) */
    for (long b0 = 0; b0 < 16; b0 += 64) {
        for (long b1 = 0; b1 < 16; b1 += 64) {
#pragma omp task
            {
                const long e0 = b0 + 64 < 16 ? b0 + 64 : 16;
                const long e1 = b1 + 64 < 16 ? b1 + 64 : 16;
                for (long i0 = b0; i0 < e0; i0++) {
                    for (long i1 = b1; i1 < e1; i1++) {
                        v[V_IDX(i0, i1)] = (((((((((((((((((0.11111f * u[U_IDX(i0 - 4, i1)]) + (0.06251f * u[U_IDX(i0 - 3, i1)])) + (0.06255f * u[U_IDX(i0 - 2, i1)])) + (0.06245f * u[U_IDX(i0 - 1, i1)])) - (0.22220f * u[U_IDX(i0, i1 - 4)])) + (0.06253f * u[U_IDX(i0, i1 - 3)])) + (0.06243f * u[U_IDX(i0, i1 - 2)])) + (0.06248f * u[U_IDX(i0, i1 - 1)])) + (0.25005f * u[U_IDX(i0, i1)])) + (0.06248f * u[U_IDX(i0, i1 + 1)])) + (0.06243f * u[U_IDX(i0, i1 + 2)])) + (0.06253f * u[U_IDX(i0, i1 + 3)])) - (0.22220f * u[U_IDX(i0, i1 + 4)])) + (0.06245f * u[U_IDX(i0 + 1, i1)])) + (0.06255f * u[U_IDX(i0 + 2, i1)])) + (0.06251f * u[U_IDX(i0 + 3, i1)])) + (0.11111f * u[U_IDX(i0 + 4, i1)]));
                    }
                }
            }
        }
    }
}

void target_star2d4r(float **u_p, float **v_p) {
    float *u = *u_p;
    float *v = *v_p;
#pragma omp parallel default(shared)
#pragma omp master
    for (long t0 = 0; t0 < 3; t0++) {
        map_0(u, v);
#pragma omp taskwait
        { float *tmp = v; v = u; u = tmp; }
    }
    *u_p = u;
    *v_p = v;
}

#ifdef STENCIL_MAIN
#include <stdio.h>
#include <string.h>

static int load_grid(const char *path, void *data, size_t bytes, unsigned char *hdr, size_t *hlen) {
    FILE *f = fopen(path, "rb");
    if (!f) return -1;
    size_t n = fread(hdr, 1, 8, f);
    if (n != 8 || memcmp(hdr, "STGR", 4) != 0) { fclose(f); return -1; }
    *hlen = 16 + 8 * (size_t)hdr[6];
    n = fread(hdr + 8, 1, *hlen - 8, f);
    n += fread(data, 1, bytes, f);
    fclose(f);
    return n == *hlen - 8 + bytes ? 0 : -1;
}

static int store_grid(const char *path, const void *data, size_t bytes, const unsigned char *hdr, size_t hlen) {
    FILE *f = fopen(path, "wb");
    if (!f) return -1;
    size_t n = fwrite(hdr, 1, hlen, f) + fwrite(data, 1, bytes, f);
    fclose(f);
    return n == hlen + bytes ? 0 : -1;
}

int main(int argc, char **argv) {
    if (argc != 5) {
        fprintf(stderr, "usage: %s IN_u IN_v OUT_u OUT_v\n", argv[0]);
        return 2;
    }
    float *u = (float *)malloc(U_LEN * sizeof(float));
    unsigned char hdr_u[64];
    size_t hlen_u = 0;
    if (load_grid(argv[1], u, U_LEN * sizeof(float), hdr_u, &hlen_u) != 0) {
        fprintf(stderr, "cannot read %s\n", argv[1]);
        return 1;
    }
    float *v = (float *)malloc(V_LEN * sizeof(float));
    unsigned char hdr_v[64];
    size_t hlen_v = 0;
    if (load_grid(argv[2], v, V_LEN * sizeof(float), hdr_v, &hlen_v) != 0) {
        fprintf(stderr, "cannot read %s\n", argv[2]);
        return 1;
    }
    target_star2d4r(&u, &v);
    if (store_grid(argv[3], u, U_LEN * sizeof(float), hdr_u, hlen_u) != 0) {
        fprintf(stderr, "cannot write %s\n", argv[3]);
        return 1;
    }
    if (store_grid(argv[4], v, V_LEN * sizeof(float), hdr_v, hlen_v) != 0) {
        fprintf(stderr, "cannot write %s\n", argv[4]);
        return 1;
    }
    free(u);
    free(v);
    return 0;
}
#endif
