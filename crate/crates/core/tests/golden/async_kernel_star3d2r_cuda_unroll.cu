/* kernel_star3d2r_cuda_unroll.cu: target target_star3d2r (ce4e88184236a579) */
/* template unroll, streaming_2_5d stream_dim=0, block 16x8x8, plane 32x32, memory shared, compute capability 8.0 */
#include <cuda_runtime.h>
#include <cuda_pipeline.h>

#define U_IDX(i0, i1, i2) ((size_t)(((i0) + 2) * 144 + ((i1) + 2) * 12 + ((i2) + 2)))
#define V_IDX(i0, i1, i2) ((size_t)(((i0) + 2) * 144 + ((i1) + 2) * 12 + ((i2) + 2)))

__global__ void kernel_star3d2r_0_0(float *u, float *v, long lo0, long hi0, long lo1, long hi1, long lo2, long hi2) {
    __shared__ float s_u[5][36 * 36];
    __shared__ float stage_u[36 * 36];
    const long t1 = lo1 + (long)blockIdx.y * blockDim.y;
    const long t2 = lo2 + (long)blockIdx.x * blockDim.x;
    const long i1 = lo1 + ((long)blockIdx.y * blockDim.y + threadIdx.y);
    const long i2 = lo2 + ((long)blockIdx.x * blockDim.x + threadIdx.x);
    const bool active = i1 < hi1 && i2 < hi2;
    /* prologue: planes below the first computed plane */
    for (long q = lo0 - 2; q < lo0 + 2; q++) {
        for (int k = threadIdx.x + blockDim.x * threadIdx.y; k < 36 * 36; k += blockDim.x * blockDim.y) {
            const long a2 = (k) % 36;
            const long a1 = ((k) / 36) % 36;
            s_u[(int)(((q - lo0) % 5 + 5) % 5)][k] = u[U_IDX(q, t1 - 2 + a1, t2 - 2 + a2)];
        }
    }
    /* prefetch the first incoming plane */
    for (int k = threadIdx.x + blockDim.x * threadIdx.y; k < 36 * 36; k += blockDim.x * blockDim.y) {
        const long a2 = (k) % 36;
        const long a1 = ((k) / 36) % 36;
        __pipeline_memcpy_async(&stage_u[k], &u[U_IDX(lo0 + 2, t1 - 2 + a1, t2 - 2 + a2)], sizeof(float));
    }
    __pipeline_commit();
    __syncthreads();
    for (long zb = lo0; zb < hi0; zb += 5) {
        if (zb + 0 < hi0) {
            const long z = zb + 0;
            __pipeline_wait_prior(0);
            __syncthreads();
            for (int k = threadIdx.x + blockDim.x * threadIdx.y; k < 36 * 36; k += blockDim.x * blockDim.y) s_u[2][k] = stage_u[k];
            __syncthreads();
            /* overlap: fetch plane z + 3 while computing */
            if (z + 3 < hi0 + 2) {
                for (int k = threadIdx.x + blockDim.x * threadIdx.y; k < 36 * 36; k += blockDim.x * blockDim.y) {
                    const long a2 = (k) % 36;
                    const long a1 = ((k) / 36) % 36;
                    __pipeline_memcpy_async(&stage_u[k], &u[U_IDX(z + 3, t1 - 2 + a1, t2 - 2 + a2)], sizeof(float));
                }
                __pipeline_commit();
            }
            __syncthreads();
            if (active) {
                v[V_IDX(z, i1, i2)] = (((((((((((((0.06053f * s_u[3][(i1 - t1 + 2) * (36) + i2 - t2 + 2]) + (0.04842f * s_u[4][(i1 - t1 + 2) * (36) + i2 - t2 + 2])) + (0.10091f * s_u[0][(i1 - t1 + 0) * (36) + i2 - t2 + 2])) + (0.04454f * s_u[0][(i1 - t1 + 1) * (36) + i2 - t2 + 2])) + (0.05575f * s_u[0][(i1 - t1 + 2) * (36) + i2 - t2 + 0])) + (0.07562f * s_u[0][(i1 - t1 + 2) * (36) + i2 - t2 + 1])) + (0.10017f * s_u[0][(i1 - t1 + 2) * (36) + i2 - t2 + 2])) + (0.07797f * s_u[0][(i1 - t1 + 2) * (36) + i2 - t2 + 3])) + (0.06406f * s_u[0][(i1 - t1 + 2) * (36) + i2 - t2 + 4])) + (0.08449f * s_u[0][(i1 - t1 + 3) * (36) + i2 - t2 + 2])) + (0.09180f * s_u[0][(i1 - t1 + 4) * (36) + i2 - t2 + 2])) + (0.09741f * s_u[1][(i1 - t1 + 2) * (36) + i2 - t2 + 2])) + (0.09833f * s_u[2][(i1 - t1 + 2) * (36) + i2 - t2 + 2]));
            }
            __syncthreads();
        }
        if (zb + 1 < hi0) {
            const long z = zb + 1;
            __pipeline_wait_prior(0);
            __syncthreads();
            for (int k = threadIdx.x + blockDim.x * threadIdx.y; k < 36 * 36; k += blockDim.x * blockDim.y) s_u[3][k] = stage_u[k];
            __syncthreads();
            /* overlap: fetch plane z + 3 while computing */
            if (z + 3 < hi0 + 2) {
                for (int k = threadIdx.x + blockDim.x * threadIdx.y; k < 36 * 36; k += blockDim.x * blockDim.y) {
                    const long a2 = (k) % 36;
                    const long a1 = ((k) / 36) % 36;
                    __pipeline_memcpy_async(&stage_u[k], &u[U_IDX(z + 3, t1 - 2 + a1, t2 - 2 + a2)], sizeof(float));
                }
                __pipeline_commit();
            }
            __syncthreads();
            if (active) {
                v[V_IDX(z, i1, i2)] = (((((((((((((0.06053f * s_u[4][(i1 - t1 + 2) * (36) + i2 - t2 + 2]) + (0.04842f * s_u[0][(i1 - t1 + 2) * (36) + i2 - t2 + 2])) + (0.10091f * s_u[1][(i1 - t1 + 0) * (36) + i2 - t2 + 2])) + (0.04454f * s_u[1][(i1 - t1 + 1) * (36) + i2 - t2 + 2])) + (0.05575f * s_u[1][(i1 - t1 + 2) * (36) + i2 - t2 + 0])) + (0.07562f * s_u[1][(i1 - t1 + 2) * (36) + i2 - t2 + 1])) + (0.10017f * s_u[1][(i1 - t1 + 2) * (36) + i2 - t2 + 2])) + (0.07797f * s_u[1][(i1 - t1 + 2) * (36) + i2 - t2 + 3])) + (0.06406f * s_u[1][(i1 - t1 + 2) * (36) + i2 - t2 + 4])) + (0.08449f * s_u[1][(i1 - t1 + 3) * (36) + i2 - t2 + 2])) + (0.09180f * s_u[1][(i1 - t1 + 4) * (36) + i2 - t2 + 2])) + (0.09741f * s_u[2][(i1 - t1 + 2) * (36) + i2 - t2 + 2])) + (0.09833f * s_u[3][(i1 - t1 + 2) * (36) + i2 - t2 + 2]));
            }
            __syncthreads();
        }
        if (zb + 2 < hi0) {
            const long z = zb + 2;
            __pipeline_wait_prior(0);
            __syncthreads();
            for (int k = threadIdx.x + blockDim.x * threadIdx.y; k < 36 * 36; k += blockDim.x * blockDim.y) s_u[4][k] = stage_u[k];
            __syncthreads();
            /* overlap: fetch plane z + 3 while computing */
            if (z + 3 < hi0 + 2) {
                for (int k = threadIdx.x + blockDim.x * threadIdx.y; k < 36 * 36; k += blockDim.x * blockDim.y) {
                    const long a2 = (k) % 36;
                    const long a1 = ((k) / 36) % 36;
                    __pipeline_memcpy_async(&stage_u[k], &u[U_IDX(z + 3, t1 - 2 + a1, t2 - 2 + a2)], sizeof(float));
                }
                __pipeline_commit();
            }
            __syncthreads();
            if (active) {
                v[V_IDX(z, i1, i2)] = (((((((((((((0.06053f * s_u[0][(i1 - t1 + 2) * (36) + i2 - t2 + 2]) + (0.04842f * s_u[1][(i1 - t1 + 2) * (36) + i2 - t2 + 2])) + (0.10091f * s_u[2][(i1 - t1 + 0) * (36) + i2 - t2 + 2])) + (0.04454f * s_u[2][(i1 - t1 + 1) * (36) + i2 - t2 + 2])) + (0.05575f * s_u[2][(i1 - t1 + 2) * (36) + i2 - t2 + 0])) + (0.07562f * s_u[2][(i1 - t1 + 2) * (36) + i2 - t2 + 1])) + (0.10017f * s_u[2][(i1 - t1 + 2) * (36) + i2 - t2 + 2])) + (0.07797f * s_u[2][(i1 - t1 + 2) * (36) + i2 - t2 + 3])) + (0.06406f * s_u[2][(i1 - t1 + 2) * (36) + i2 - t2 + 4])) + (0.08449f * s_u[2][(i1 - t1 + 3) * (36) + i2 - t2 + 2])) + (0.09180f * s_u[2][(i1 - t1 + 4) * (36) + i2 - t2 + 2])) + (0.09741f * s_u[3][(i1 - t1 + 2) * (36) + i2 - t2 + 2])) + (0.09833f * s_u[4][(i1 - t1 + 2) * (36) + i2 - t2 + 2]));
            }
            __syncthreads();
        }
        if (zb + 3 < hi0) {
            const long z = zb + 3;
            __pipeline_wait_prior(0);
            __syncthreads();
            for (int k = threadIdx.x + blockDim.x * threadIdx.y; k < 36 * 36; k += blockDim.x * blockDim.y) s_u[0][k] = stage_u[k];
            __syncthreads();
            /* overlap: fetch plane z + 3 while computing */
            if (z + 3 < hi0 + 2) {
                for (int k = threadIdx.x + blockDim.x * threadIdx.y; k < 36 * 36; k += blockDim.x * blockDim.y) {
                    const long a2 = (k) % 36;
                    const long a1 = ((k) / 36) % 36;
                    __pipeline_memcpy_async(&stage_u[k], &u[U_IDX(z + 3, t1 - 2 + a1, t2 - 2 + a2)], sizeof(float));
                }
                __pipeline_commit();
            }
            __syncthreads();
            if (active) {
                v[V_IDX(z, i1, i2)] = (((((((((((((0.06053f * s_u[1][(i1 - t1 + 2) * (36) + i2 - t2 + 2]) + (0.04842f * s_u[2][(i1 - t1 + 2) * (36) + i2 - t2 + 2])) + (0.10091f * s_u[3][(i1 - t1 + 0) * (36) + i2 - t2 + 2])) + (0.04454f * s_u[3][(i1 - t1 + 1) * (36) + i2 - t2 + 2])) + (0.05575f * s_u[3][(i1 - t1 + 2) * (36) + i2 - t2 + 0])) + (0.07562f * s_u[3][(i1 - t1 + 2) * (36) + i2 - t2 + 1])) + (0.10017f * s_u[3][(i1 - t1 + 2) * (36) + i2 - t2 + 2])) + (0.07797f * s_u[3][(i1 - t1 + 2) * (36) + i2 - t2 + 3])) + (0.06406f * s_u[3][(i1 - t1 + 2) * (36) + i2 - t2 + 4])) + (0.08449f * s_u[3][(i1 - t1 + 3) * (36) + i2 - t2 + 2])) + (0.09180f * s_u[3][(i1 - t1 + 4) * (36) + i2 - t2 + 2])) + (0.09741f * s_u[4][(i1 - t1 + 2) * (36) + i2 - t2 + 2])) + (0.09833f * s_u[0][(i1 - t1 + 2) * (36) + i2 - t2 + 2]));
            }
            __syncthreads();
        }
        if (zb + 4 < hi0) {
            const long z = zb + 4;
            __pipeline_wait_prior(0);
            __syncthreads();
            for (int k = threadIdx.x + blockDim.x * threadIdx.y; k < 36 * 36; k += blockDim.x * blockDim.y) s_u[1][k] = stage_u[k];
            __syncthreads();
            /* overlap: fetch plane z + 3 while computing */
            if (z + 3 < hi0 + 2) {
                for (int k = threadIdx.x + blockDim.x * threadIdx.y; k < 36 * 36; k += blockDim.x * blockDim.y) {
                    const long a2 = (k) % 36;
                    const long a1 = ((k) / 36) % 36;
                    __pipeline_memcpy_async(&stage_u[k], &u[U_IDX(z + 3, t1 - 2 + a1, t2 - 2 + a2)], sizeof(float));
                }
                __pipeline_commit();
            }
            __syncthreads();
            if (active) {
                v[V_IDX(z, i1, i2)] = (((((((((((((0.06053f * s_u[2][(i1 - t1 + 2) * (36) + i2 - t2 + 2]) + (0.04842f * s_u[3][(i1 - t1 + 2) * (36) + i2 - t2 + 2])) + (0.10091f * s_u[4][(i1 - t1 + 0) * (36) + i2 - t2 + 2])) + (0.04454f * s_u[4][(i1 - t1 + 1) * (36) + i2 - t2 + 2])) + (0.05575f * s_u[4][(i1 - t1 + 2) * (36) + i2 - t2 + 0])) + (0.07562f * s_u[4][(i1 - t1 + 2) * (36) + i2 - t2 + 1])) + (0.10017f * s_u[4][(i1 - t1 + 2) * (36) + i2 - t2 + 2])) + (0.07797f * s_u[4][(i1 - t1 + 2) * (36) + i2 - t2 + 3])) + (0.06406f * s_u[4][(i1 - t1 + 2) * (36) + i2 - t2 + 4])) + (0.08449f * s_u[4][(i1 - t1 + 3) * (36) + i2 - t2 + 2])) + (0.09180f * s_u[4][(i1 - t1 + 4) * (36) + i2 - t2 + 2])) + (0.09741f * s_u[0][(i1 - t1 + 2) * (36) + i2 - t2 + 2])) + (0.09833f * s_u[1][(i1 - t1 + 2) * (36) + i2 - t2 + 2]));
            }
            __syncthreads();
        }
    }
}

void target_star3d2r_host(float *h_u, float *h_v) {
    float *u;
    cudaMalloc((void **)&u, 1728 * sizeof(float));
    cudaMemcpy(u, h_u, 1728 * sizeof(float), cudaMemcpyHostToDevice);
    float *v;
    cudaMalloc((void **)&v, 1728 * sizeof(float));
    cudaMemcpy(v, h_v, 1728 * sizeof(float), cudaMemcpyHostToDevice);
    cudaStream_t stream;
    cudaStreamCreate(&stream);
    for (long t0 = 0; t0 < 3; t0++) {
        kernel_star3d2r_0_0<<<dim3(1, 1, 1), dim3(32, 32, 1), 0, stream>>>(u, v, 0, 8, 0, 8, 0, 8);
        { float *tmp = v; v = u; u = tmp; }
    }
    cudaStreamSynchronize(stream);
    cudaMemcpy(h_u, u, 1728 * sizeof(float), cudaMemcpyDeviceToHost);
    cudaFree(u);
    cudaMemcpy(h_v, v, 1728 * sizeof(float), cudaMemcpyDeviceToHost);
    cudaFree(v);
    cudaStreamDestroy(stream);
}
