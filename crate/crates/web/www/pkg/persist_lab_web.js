/**
 * Scalar summary of one rate triple.
 */
export class Summary {
    static __wrap(ptr) {
        const obj = Object.create(Summary.prototype);
        obj.__wbg_ptr = ptr;
        SummaryFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        SummaryFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_summary_free(ptr, 0);
    }
    /**
     * @returns {number}
     */
    get c1() {
        const ret = wasm.__wbg_get_summary_c1(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get c2() {
        const ret = wasm.__wbg_get_summary_c2(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get delta_c_lower_bound() {
        const ret = wasm.__wbg_get_summary_delta_c_lower_bound(this.__wbg_ptr);
        return ret;
    }
    /**
     * `NaN` unless requested.
     * @returns {number}
     */
    get delta_c() {
        const ret = wasm.__wbg_get_summary_delta_c(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get nu1() {
        const ret = wasm.__wbg_get_summary_nu1(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get nu2() {
        const ret = wasm.__wbg_get_summary_nu2(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get t_star() {
        const ret = wasm.__wbg_get_summary_t_star(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get tc() {
        const ret = wasm.__wbg_get_summary_tc(this.__wbg_ptr);
        return ret;
    }
    /**
     * @param {number} arg0
     */
    set c1(arg0) {
        wasm.__wbg_set_summary_c1(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set c2(arg0) {
        wasm.__wbg_set_summary_c2(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set delta_c_lower_bound(arg0) {
        wasm.__wbg_set_summary_delta_c_lower_bound(this.__wbg_ptr, arg0);
    }
    /**
     * `NaN` unless requested.
     * @param {number} arg0
     */
    set delta_c(arg0) {
        wasm.__wbg_set_summary_delta_c(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set nu1(arg0) {
        wasm.__wbg_set_summary_nu1(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set nu2(arg0) {
        wasm.__wbg_set_summary_nu2(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set t_star(arg0) {
        wasm.__wbg_set_summary_t_star(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set tc(arg0) {
        wasm.__wbg_set_summary_tc(this.__wbg_ptr, arg0);
    }
}
if (Symbol.dispose) Summary.prototype[Symbol.dispose] = Summary.prototype.free;

/**
 * @param {number} lambda
 * @param {number} a
 * @param {number} b
 * @param {number} t_max
 * @param {number} points
 * @returns {Float64Array}
 */
export function meanCurves(lambda, a, b, t_max, points) {
    const ret = wasm.meanCurves(lambda, a, b, t_max, points);
    if (ret[3]) {
        throw takeFromExternrefTable0(ret[2]);
    }
    var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
    wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
    return v1;
}

/**
 * @param {number} lambda
 * @param {number} a
 * @param {number} b
 * @param {number} delta_min
 * @param {number} delta_max
 * @param {number} points
 * @returns {Float64Array}
 */
export function mprimeCurve(lambda, a, b, delta_min, delta_max, points) {
    const ret = wasm.mprimeCurve(lambda, a, b, delta_min, delta_max, points);
    if (ret[3]) {
        throw takeFromExternrefTable0(ret[2]);
    }
    var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
    wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
    return v1;
}

/**
 * @param {number} lambda
 * @param {number} a
 * @param {number} b
 * @param {boolean} with_delta_c
 * @returns {Summary}
 */
export function summary(lambda, a, b, with_delta_c) {
    const ret = wasm.summary(lambda, a, b, with_delta_c);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return Summary.__wrap(ret[0]);
}

/**
 * @param {number} a
 * @param {number} b
 * @param {number} lambda_min
 * @param {number} lambda_max
 * @param {number} points
 * @returns {Float64Array}
 */
export function tcCurve(a, b, lambda_min, lambda_max, points) {
    const ret = wasm.tcCurve(a, b, lambda_min, lambda_max, points);
    if (ret[3]) {
        throw takeFromExternrefTable0(ret[2]);
    }
    var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
    wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
    return v1;
}
function __wbg_get_imports() {
    const import0 = {
        __proto__: null,
        __wbg_Error_92b29b0548f8b746: function(arg0, arg1) {
            const ret = Error(getStringFromWasm0(arg0, arg1));
            return ret;
        },
        __wbg___wbindgen_throw_344f42d3211c4765: function(arg0, arg1) {
            throw new Error(getStringFromWasm0(arg0, arg1));
        },
        __wbindgen_init_externref_table: function() {
            const table = wasm.__wbindgen_externrefs;
            const offset = table.grow(4);
            table.set(0, undefined);
            table.set(offset + 0, undefined);
            table.set(offset + 1, null);
            table.set(offset + 2, true);
            table.set(offset + 3, false);
        },
    };
    return {
        __proto__: null,
        "./persist_lab_web_bg.js": import0,
    };
}

const SummaryFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_summary_free(ptr, 1));

function getArrayF64FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getFloat64ArrayMemory0().subarray(ptr / 8, ptr / 8 + len);
}

let cachedFloat64ArrayMemory0 = null;
function getFloat64ArrayMemory0() {
    if (cachedFloat64ArrayMemory0 === null || cachedFloat64ArrayMemory0.byteLength === 0) {
        cachedFloat64ArrayMemory0 = new Float64Array(wasm.memory.buffer);
    }
    return cachedFloat64ArrayMemory0;
}

function getStringFromWasm0(ptr, len) {
    return decodeText(ptr >>> 0, len);
}

let cachedUint8ArrayMemory0 = null;
function getUint8ArrayMemory0() {
    if (cachedUint8ArrayMemory0 === null || cachedUint8ArrayMemory0.byteLength === 0) {
        cachedUint8ArrayMemory0 = new Uint8Array(wasm.memory.buffer);
    }
    return cachedUint8ArrayMemory0;
}

function takeFromExternrefTable0(idx) {
    const value = wasm.__wbindgen_externrefs.get(idx);
    wasm.__externref_table_dealloc(idx);
    return value;
}

let cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
cachedTextDecoder.decode();
const MAX_SAFARI_DECODE_BYTES = 2146435072;
let numBytesDecoded = 0;
function decodeText(ptr, len) {
    numBytesDecoded += len;
    if (numBytesDecoded >= MAX_SAFARI_DECODE_BYTES) {
        cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
        cachedTextDecoder.decode();
        numBytesDecoded = len;
    }
    return cachedTextDecoder.decode(getUint8ArrayMemory0().subarray(ptr, ptr + len));
}

let wasmModule, wasmInstance, wasm;
function __wbg_finalize_init(instance, module) {
    wasmInstance = instance;
    wasm = instance.exports;
    wasmModule = module;
    cachedFloat64ArrayMemory0 = null;
    cachedUint8ArrayMemory0 = null;
    wasm.__wbindgen_start();
    return wasm;
}

async function __wbg_load(module, imports) {
    if (typeof Response === 'function' && module instanceof Response) {
        if (typeof WebAssembly.instantiateStreaming === 'function') {
            try {
                return await WebAssembly.instantiateStreaming(module, imports);
            } catch (e) {
                const validResponse = module.ok && expectedResponseType(module.type);

                if (validResponse && module.headers.get('Content-Type') !== 'application/wasm') {
                    console.warn("`WebAssembly.instantiateStreaming` failed because your server does not serve Wasm with `application/wasm` MIME type. Falling back to `WebAssembly.instantiate` which is slower. Original error:\n", e);

                } else { throw e; }
            }
        }

        const bytes = await module.arrayBuffer();
        return await WebAssembly.instantiate(bytes, imports);
    } else {
        const instance = await WebAssembly.instantiate(module, imports);

        if (instance instanceof WebAssembly.Instance) {
            return { instance, module };
        } else {
            return instance;
        }
    }

    function expectedResponseType(type) {
        switch (type) {
            case 'basic': case 'cors': case 'default': return true;
        }
        return false;
    }
}

function initSync(module) {
    if (wasm !== undefined) return wasm;


    if (module !== undefined) {
        if (Object.getPrototypeOf(module) === Object.prototype) {
            ({module} = module)
        } else {
            console.warn('using deprecated parameters for `initSync()`; pass a single object instead')
        }
    }

    const imports = __wbg_get_imports();
    if (!(module instanceof WebAssembly.Module)) {
        module = new WebAssembly.Module(module);
    }
    const instance = new WebAssembly.Instance(module, imports);
    return __wbg_finalize_init(instance, module);
}

async function __wbg_init(module_or_path) {
    if (wasm !== undefined) return wasm;


    if (module_or_path !== undefined) {
        if (Object.getPrototypeOf(module_or_path) === Object.prototype) {
            ({module_or_path} = module_or_path)
        } else {
            console.warn('using deprecated parameters for the initialization function; pass a single object instead')
        }
    }

    if (module_or_path === undefined) {
        module_or_path = new URL('persist_lab_web_bg.wasm', import.meta.url);
    }
    const imports = __wbg_get_imports();

    if (typeof module_or_path === 'string' || (typeof Request === 'function' && module_or_path instanceof Request) || (typeof URL === 'function' && module_or_path instanceof URL)) {
        module_or_path = fetch(module_or_path);
    }

    const { instance, module } = await __wbg_load(await module_or_path, imports);

    return __wbg_finalize_init(instance, module);
}

export { initSync, __wbg_init as default };
