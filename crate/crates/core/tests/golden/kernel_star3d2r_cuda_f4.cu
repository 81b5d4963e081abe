/* kernel_star3d2r_cuda_f4.cu: target target_star3d2r (1d8369f8b0acb5aa) */
/* template f4, blocking_3d, block 16x8x8, plane 32x32, memory registers, compute capability 8.0 */
#include <cuda_runtime.h>

#define U_IDX(i0, i1, i2) ((size_t)(((i0) + 2) * 144 + ((i1) + 2) * 12 + ((i2) + 2)))
#define V_IDX(i0, i1, i2) ((size_t)(((i0) + 2) * 144 + ((i1) + 2) * 12 + ((i2) + 2)))

static __device__ __forceinline__ float4 load4(const float *p, size_t i) {
    return make_float4(p[i], p[i + 1], p[i + 2], p[i + 3]);
}

__global__ void kernel_star3d2r_0_0(float *u, float *v, long lo0, long hi0, long lo1, long hi1, long lo2, long hi2) {
    const long i0 = lo0 + ((long)blockIdx.z * blockDim.z + threadIdx.z);
    const long i1 = lo1 + ((long)blockIdx.y * blockDim.y + threadIdx.y);
    const long i2 = lo2 + 4 * ((long)blockIdx.x * blockDim.x + threadIdx.x);
    if (!(i0 < hi0 && i1 < hi1 && i2 < hi2)) return;
    const float4 r0 = load4(u, U_IDX(i0 - 2, i1, i2));
    const float4 r1 = load4(u, U_IDX(i0 - 1, i1, i2));
    const float4 r2 = load4(u, U_IDX(i0, i1 - 2, i2));
    const float4 r3 = load4(u, U_IDX(i0, i1 - 1, i2));
    const float4 r4 = load4(u, U_IDX(i0, i1, i2 - 2));
    const float4 r5 = load4(u, U_IDX(i0, i1, i2 - 1));
    const float4 r6 = load4(u, U_IDX(i0, i1, i2));
    const float4 r7 = load4(u, U_IDX(i0, i1, i2 + 1));
    const float4 r8 = load4(u, U_IDX(i0, i1, i2 + 2));
    const float4 r9 = load4(u, U_IDX(i0, i1 + 1, i2));
    const float4 r10 = load4(u, U_IDX(i0, i1 + 2, i2));
    const float4 r11 = load4(u, U_IDX(i0 + 1, i1, i2));
    const float4 r12 = load4(u, U_IDX(i0 + 2, i1, i2));
    float4 out;
    out.x = (((((((((((((0.06053f * r0.x) + (0.04842f * r1.x)) + (0.10091f * r2.x)) + (0.04454f * r3.x)) + (0.05575f * r4.x)) + (0.07562f * r5.x)) + (0.10017f * r6.x)) + (0.07797f * r7.x)) + (0.06406f * r8.x)) + (0.08449f * r9.x)) + (0.09180f * r10.x)) + (0.09741f * r11.x)) + (0.09833f * r12.x));
    out.y = (((((((((((((0.06053f * r0.y) + (0.04842f * r1.y)) + (0.10091f * r2.y)) + (0.04454f * r3.y)) + (0.05575f * r4.y)) + (0.07562f * r5.y)) + (0.10017f * r6.y)) + (0.07797f * r7.y)) + (0.06406f * r8.y)) + (0.08449f * r9.y)) + (0.09180f * r10.y)) + (0.09741f * r11.y)) + (0.09833f * r12.y));
    out.z = (((((((((((((0.06053f * r0.z) + (0.04842f * r1.z)) + (0.10091f * r2.z)) + (0.04454f * r3.z)) + (0.05575f * r4.z)) + (0.07562f * r5.z)) + (0.10017f * r6.z)) + (0.07797f * r7.z)) + (0.06406f * r8.z)) + (0.08449f * r9.z)) + (0.09180f * r10.z)) + (0.09741f * r11.z)) + (0.09833f * r12.z));
    out.w = (((((((((((((0.06053f * r0.w) + (0.04842f * r1.w)) + (0.10091f * r2.w)) + (0.04454f * r3.w)) + (0.05575f * r4.w)) + (0.07562f * r5.w)) + (0.10017f * r6.w)) + (0.07797f * r7.w)) + (0.06406f * r8.w)) + (0.08449f * r9.w)) + (0.09180f * r10.w)) + (0.09741f * r11.w)) + (0.09833f * r12.w));
    v[V_IDX(i0, i1, i2)] = out.x;
    v[V_IDX(i0, i1, i2 + 1)] = out.y;
    v[V_IDX(i0, i1, i2 + 2)] = out.z;
    v[V_IDX(i0, i1, i2 + 3)] = out.w;
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
        kernel_star3d2r_0_0<<<dim3(1, 1, 1), dim3(16, 8, 8), 0, stream>>>(u, v, 0, 8, 0, 8, 0, 8);
        { float *tmp = v; v = u; u = tmp; }
    }
    cudaStreamSynchronize(stream);
    cudaMemcpy(h_u, u, 1728 * sizeof(float), cudaMemcpyDeviceToHost);
    cudaFree(u);
    cudaMemcpy(h_v, v, 1728 * sizeof(float), cudaMemcpyDeviceToHost);
    cudaFree(v);
    cudaStreamDestroy(stream);
}
